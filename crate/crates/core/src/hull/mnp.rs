//! Wolfe's minimum-norm-point algorithm over the convex hull of atoms supplied
//! by a linear minimization oracle.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Supplies atoms of a convex set, all expressed relative to the target point.
pub(crate) trait AtomOracle {
    /// Atom minimizing `⟨x, p⟩`, returned as `(⟨x, p⟩, id)`.
    fn minimize(&mut self, x: &[f64], corral: &[usize]) -> Result<(f64, usize)>;
    fn point(&self, id: usize) -> &[f64];
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct MnpConfig {
    pub max_iter: usize,
    /// Distances at or below this count as zero.
    pub dist_tol: f64,
    /// Relative optimality gap `(‖x‖² - min ⟨x, p⟩) / ‖x‖` below which `x` is
    /// the min-norm point.
    pub gap_tol: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct MnpOutcome {
    pub corral: Vec<usize>,
    pub weights: Vec<f64>,
    pub distance: f64,
    pub iterations: usize,
    /// `false` when the iteration cap ended the run.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine<O: AtomOracle>(oracle: &O, corral: &[usize], w: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&id, &wi) in corral.iter().zip(w) {
        for (xi, pi) in x.iter_mut().zip(oracle.point(id)) {
            *xi += wi * pi;
        }
    }
    x
}

/// Minimum-norm least-squares solution of `D β ≈ r` through the eigenpairs of
/// `DᵀD`, refined once against the residual.
fn least_squares(dmat: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = dmat.transpose() * dmat;
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000).ok_or(Error::Eigensolver)?;
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let apply = |g: &DVector<f64>| {
        let mut out = DVector::zeros(g.len());
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > 1e-14 * lmax {
                let v = eig.eigenvectors.column(i);
                out += v * (v.dot(g) / l);
            }
        }
        out
    };
    let mut beta = apply(&(dmat.transpose() * rhs));
    let resid = rhs - dmat * &beta;
    beta += apply(&(dmat.transpose() * resid));
    Ok(beta)
}

/// Affine combination of the corral points with minimal norm.
fn affine_minimizer<O: AtomOracle>(oracle: &O, corral: &[usize], dim: usize) -> Result<Vec<f64>> {
    let m = corral.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let p0 = oracle.point(corral[0]);
    let diffs = DMatrix::from_fn(dim, m - 1, |r, c| oracle.point(corral[c + 1])[r] - p0[r]);
    let rhs = DVector::from_iterator(dim, p0.iter().map(|v| -v));
    let beta = least_squares(&diffs, &rhs)?;
    let mut alpha = Vec::with_capacity(m);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter());
    Ok(alpha)
}

/// Removes near affine dependencies from the corral without moving the
/// combined point (Carathéodory reduction). Rounding can make the corral
/// dependent, after which the affine minimizer stops being trustworthy.
fn reduce_corral<O: AtomOracle>(oracle: &O, corral: &mut Vec<usize>, w: &mut Vec<f64>, dim: usize) -> Result<()> {
    while corral.len() > 1 {
        let m = corral.len();
        let a = DMatrix::from_fn(dim + 1, m, |r, c| if r == dim { 1.0 } else { oracle.point(corral[c])[r] });
        let gram = a.transpose() * &a;
        let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000).ok_or(Error::Eigensolver)?;
        let (imin, &lmin) = eig.eigenvalues.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("m > 1");
        let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        if lmin > 1e-20 * lmax {
            break;
        }
        let mut z: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
        if z.iter().all(|&v| v <= 0.0) {
            z.iter_mut().for_each(|v| *v = -*v);
        }
        let mut t = f64::INFINITY;
        let mut drop = 0;
        for (i, (&zi, &wi)) in z.iter().zip(w.iter()).enumerate() {
            if zi > 0.0 && wi / zi < t {
                t = wi / zi;
                drop = i;
            }
        }
        for (wi, zi) in w.iter_mut().zip(&z) {
            *wi = (*wi - t * zi).max(0.0);
        }
        w[drop] = 0.0;
        let keep: Vec<bool> = w.iter().map(|&v| v > 1e-15).collect();
        let mut k = keep.iter();
        corral.retain(|_| *k.next().expect("same length"));
        w.retain(|&v| v > 1e-15);
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
    }
    Ok(())
}

pub(crate) fn min_norm_point<O: AtomOracle>(
    oracle: &mut O,
    dim: usize,
    first: usize,
    cfg: &MnpConfig,
) -> Result<MnpOutcome> {
    let mut corral = vec![first];
    let mut w = vec![1.0];
    let mut x = oracle.point(first).to_vec();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let xx = dot(&x, &x);
        if xx.sqrt() <= cfg.dist_tol {
            converged = true;
            break;
        }
        let (val, q) = oracle.minimize(&x, &corral)?;
        // `val / ‖x‖` bounds the distance from below: the hyperplane normal
        // to `x` already separates the origin
        if val > cfg.dist_tol * xx.sqrt() || xx - val <= cfg.gap_tol * xx.sqrt() {
            converged = true;
            break;
        }
        if corral.contains(&q) {
            // x is already the min-norm point at working precision
            converged = true;
            break;
        }
        reduce_corral(oracle, &mut corral, &mut w, dim)?;
        let before = corral.clone();
        corral.push(q);
        w.push(0.0);
        loop {
            let alpha = affine_minimizer(oracle, &corral, dim)?;
            if alpha.iter().all(|&a| a > 1e-14) {
                w = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (&wi, &ai) in w.iter().zip(&alpha) {
                if ai <= 1e-14 && wi - ai > 0.0 {
                    theta = theta.min(wi / (wi - ai));
                }
            }
            for (wi, ai) in w.iter_mut().zip(&alpha) {
                *wi = (1.0 - theta) * *wi + theta * ai;
            }
            let mut keep_c = Vec::with_capacity(corral.len());
            let mut keep_w = Vec::with_capacity(w.len());
            for (&id, &wi) in corral.iter().zip(&w) {
                if wi > 1e-14 {
                    keep_c.push(id);
                    keep_w.push(wi);
                }
            }
            if keep_c.is_empty() {
                return Err(Error::HullSolver("corral collapsed".into()));
            }
            if keep_c.len() == corral.len() {
                // drop the smallest weight so the minor cycle terminates
                let (i, _) = keep_w
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("non-empty corral");
                keep_c.remove(i);
                keep_w.remove(i);
            }
            corral = keep_c;
            w = keep_w;
        }
        let s: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= s;
        }
        let stalled = corral == before;
        x = combine(oracle, &corral, &w, dim);
        if stalled {
            // the new atom was rejected by the minor cycle: no descent left at
            // working precision
            converged = true;
            break;
        }
    }
    let distance = dot(&x, &x).sqrt();
    Ok(MnpOutcome { corral, weights: w, distance, iterations, converged })
}

/// Oracle over a fixed finite point set.
pub(crate) struct FiniteOracle {
    points: Vec<Vec<f64>>,
}

impl FiniteOracle {
    pub fn new(atoms: &[&[f64]], target: &[f64]) -> Self {
        let points = atoms
            .iter()
            .map(|a| a.iter().zip(target).map(|(x, t)| x - t).collect())
            .collect();
        Self { points }
    }

    pub fn nearest(&self) -> Option<usize> {
        (0..self.points.len()).min_by(|&a, &b| {
            dot(&self.points[a], &self.points[a]).total_cmp(&dot(&self.points[b], &self.points[b]))
        })
    }
}

impl AtomOracle for FiniteOracle {
    fn minimize(&mut self, x: &[f64], _corral: &[usize]) -> Result<(f64, usize)> {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let v = dot(x, p);
            if v < best.0 {
                best = (v, i);
            }
        }
        Ok(best)
    }

    fn point(&self, id: usize) -> &[f64] {
        &self.points[id]
    }
}
