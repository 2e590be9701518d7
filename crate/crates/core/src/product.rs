//! Optimization of Bell-diagonal observables over pure product states.
//!
//! For `W = Σ κ_{k,l} P_{k,l}` the expectation `⟨a⊗b|W|a⊗b⟩` is a Hermitian
//! quadratic form in `a` for fixed `b` and vice versa. Alternating exact
//! minimization of the two forms (a lowest-eigenvector step each) decreases the
//! objective monotonically; random restarts handle the non-convexity.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::twirled_product;
use crate::weyl::roots_of_unity;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductConfig {
    /// Number of random starts; `0` means `64 * d`.
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Stop a run once one sweep improves the objective by less than this.
    pub tol: f64,
    /// Tolerance for the final refinement of the best run.
    pub polish_tol: f64,
    /// Two runs agree when their final values differ by at most this.
    pub agree_tol: f64,
}

impl Default for ProductConfig {
    fn default() -> Self {
        Self { restarts: 0, max_sweeps: 500, tol: 1e-10, polish_tol: 1e-15, agree_tol: 1e-7 }
    }
}

impl ProductConfig {
    pub fn restarts_for(&self, d: usize) -> usize {
        if self.restarts == 0 {
            64 * d
        } else {
            self.restarts
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProductOptimum {
    pub value: f64,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// Runs that ended within `agree_tol` of the best value.
    pub hits: usize,
    pub restarts: usize,
}

/// `K_l(δ) = Σ_k κ_{k,l} w^{kδ}`, indexed `[l * d + δ]`.
fn kernel_transform(d: usize, kappa: &[f64], roots: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for l in 0..d {
        for delta in 0..d {
            out[l * d + delta] = (0..d).map(|k| roots[(k * delta) % d] * kappa[k * d + l]).sum();
        }
    }
    out
}

/// `Σ κ_{k,l} |⟨Ω_{k,l}|a⊗b⟩|²`.
pub fn product_expectation(d: usize, kappa: &[f64], a: &[Complex64], b: &[Complex64]) -> f64 {
    twirled_product(d, a, b).iter().zip(kappa).map(|(t, k)| t * k).sum()
}

fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

fn lowest_eigenvector(m: DMatrix<Complex64>) -> Result<(f64, Vec<Complex64>)> {
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000).ok_or(Error::Eigensolver)?;
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty spectrum");
    let mut v: Vec<Complex64> = eig.eigenvectors.column(idx).iter().copied().collect();
    // fix the global phase so runs are comparable
    if let Some(pivot) = v.iter().copied().max_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr())) {
        let phase = pivot.conj() / pivot.norm();
        for z in &mut v {
            *z *= phase;
        }
    }
    normalize(&mut v);
    Ok((val, v))
}

struct Alternator {
    d: usize,
    kt: Vec<Complex64>,
}

impl Alternator {
    fn new(d: usize, kappa: &[f64]) -> Self {
        let roots = roots_of_unity(d);
        Self { d, kt: kernel_transform(d, kappa, &roots) }
    }

    /// Quadratic form in the first factor for fixed `b`.
    fn form_a(&self, b: &[Complex64]) -> DMatrix<Complex64> {
        let d = self.d;
        let inv = 1.0 / d as f64;
        DMatrix::from_fn(d, d, |j, jp| {
            let delta = (d + j - jp) % d;
            let mut z = Complex64::new(0.0, 0.0);
            for l in 0..d {
                z += self.kt[l * d + delta] * b[(j + l) % d].conj() * b[(jp + l) % d];
            }
            z * inv
        })
    }

    /// Quadratic form in the second factor for fixed `a`.
    fn form_b(&self, a: &[Complex64]) -> DMatrix<Complex64> {
        let d = self.d;
        let inv = 1.0 / d as f64;
        DMatrix::from_fn(d, d, |m, mp| {
            let delta = (d + m - mp) % d;
            let mut z = Complex64::new(0.0, 0.0);
            for l in 0..d {
                z += self.kt[l * d + delta] * a[(d + m - l) % d].conj() * a[(d + mp - l) % d];
            }
            z * inv
        })
    }

    fn run(
        &self,
        mut a: Vec<Complex64>,
        mut b: Vec<Complex64>,
        tol: f64,
        max_sweeps: usize,
    ) -> Result<(f64, Vec<Complex64>, Vec<Complex64>)> {
        let mut value = f64::INFINITY;
        for _ in 0..max_sweeps {
            let (_, na) = lowest_eigenvector(self.form_a(&b))?;
            a = na;
            let (v, nb) = lowest_eigenvector(self.form_b(&a))?;
            b = nb;
            let done = value - v < tol;
            value = v;
            if done {
                break;
            }
        }
        Ok((value, a, b))
    }
}

/// Multi-start minimization of `Σ κ_{k,l} |⟨Ω_{k,l}|a⊗b⟩|²` over unit `a`, `b`.
pub fn minimize_product<R: Rng + ?Sized>(
    d: usize,
    kappa: &[f64],
    cfg: &ProductConfig,
    rng: &mut R,
) -> Result<ProductOptimum> {
    minimize_product_from(d, kappa, &[], cfg, rng)
}

/// Like [`minimize_product`], with extra runs started from the given pairs
/// before the random starts.
pub fn minimize_product_from<R: Rng + ?Sized>(
    d: usize,
    kappa: &[f64],
    starts: &[(&[Complex64], &[Complex64])],
    cfg: &ProductConfig,
    rng: &mut R,
) -> Result<ProductOptimum> {
    if kappa.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, actual: kappa.len() });
    }
    if kappa.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let alt = Alternator::new(d, kappa);
    if starts.iter().any(|(a, b)| a.len() != d || b.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, actual: 0 });
    }
    let random = cfg.restarts_for(d).max(1);
    let restarts = random + starts.len();
    let mut values = Vec::with_capacity(restarts);
    let mut best: Option<(f64, Vec<Complex64>, Vec<Complex64>)> = None;
    for i in 0..restarts {
        let (a0, b0) = match starts.get(i) {
            Some((a, b)) => (a.to_vec(), b.to_vec()),
            None => (random_unit(d, rng), random_unit(d, rng)),
        };
        let (_, a, b) = alt.run(a0, b0, cfg.tol, cfg.max_sweeps)?;
        // re-evaluate through the independent overlap formula
        let v = product_expectation(d, kappa, &a, &b);
        values.push(v);
        if best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
            best = Some((v, a, b));
        }
    }
    let (_, a, b) = best.expect("at least one restart");
    let (_, a, b) = alt.run(a, b, cfg.polish_tol, 20 * cfg.max_sweeps)?;
    let value = product_expectation(d, kappa, &a, &b);
    let hits = values.iter().filter(|&&v| v - value <= cfg.agree_tol).count();
    Ok(ProductOptimum { value, a, b, hits, restarts })
}

/// Maximization counterpart of [`minimize_product`].
pub fn maximize_product<R: Rng + ?Sized>(
    d: usize,
    kappa: &[f64],
    cfg: &ProductConfig,
    rng: &mut R,
) -> Result<ProductOptimum> {
    let neg: Vec<f64> = kappa.iter().map(|x| -x).collect();
    let mut opt = minimize_product(d, &neg, cfg, rng)?;
    opt.value = -opt.value;
    Ok(opt)
}
