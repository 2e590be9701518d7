//! Bell-diagonal states: simplex coordinates, density matrices, polytope
//! membership and uniform samplers.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};
use crate::io;
use crate::matrix::ComplexMatrix;
use crate::weyl::{self, root_of_unity, PhaseSubgroup};

/// Slack for slightly negative coordinates and for the normalization check.
pub const NORM_EPS: f64 = 1e-12;
/// Inclusive slack on the enclosure bound `c ≤ 1/d`.
pub const ENCLOSURE_EPS: f64 = 1e-12;

/// Mixing probabilities `c_{k,l}` over the Bell projectors, flattened as
/// `k * d + l`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellDiagonalState {
    d: usize,
    c: Vec<f64>,
}

impl BellDiagonalState {
    pub fn new(d: usize, c: Vec<f64>) -> Result<Self> {
        check_dimension(d)?;
        if c.len() != d * d {
            return Err(Error::InvalidState(format!(
                "expected {} coordinates for d = {d}, got {}",
                d * d,
                c.len()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(x) = c.iter().find(|&&x| x < -NORM_EPS) {
            return Err(Error::InvalidState(format!("negative coordinate {x}")));
        }
        let sum: f64 = c.iter().sum();
        if (sum - 1.0).abs() > NORM_EPS {
            return Err(Error::InvalidState(format!("coordinates sum to {sum}")));
        }
        Ok(Self { d, c })
    }

    /// Rescales a nonnegative weight vector onto the simplex.
    pub fn normalized(d: usize, weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidState("weights must have positive sum".into()));
        }
        Self::new(d, weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self { d, c: vec![1.0 / (d * d) as f64; d * d] })
    }

    /// The pure Bell state `P_{k,l}`.
    pub fn indicator(d: usize, k: usize, l: usize) -> Result<Self> {
        let p = weyl::PhasePoint::new(d, k, l)?;
        let mut c = vec![0.0; d * d];
        c[p.flat()] = 1.0;
        Ok(Self { d, c })
    }

    /// Equal mixture of the Bell states on a subgroup or coset.
    pub fn subgroup_state(coset: &PhaseSubgroup) -> Self {
        let d = coset.d;
        let mut c = vec![0.0; d * d];
        for p in &coset.points {
            c[p.flat()] = 1.0 / d as f64;
        }
        Self { d, c }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coords(&self) -> &[f64] {
        &self.c
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.c
    }

    pub fn coord(&self, k: usize, l: usize) -> f64 {
        self.c[k * self.d + l]
    }

    pub fn max_coord(&self) -> f64 {
        self.c.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `λ self + (1 - λ) other`
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: other.d });
        }
        Self::new(
            self.d,
            self.c.iter().zip(&other.c).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect(),
        )
    }

    /// Purity `tr ρ² = Σ c²`.
    pub fn purity(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }

    pub fn in_enclosure(&self) -> bool {
        in_enclosure(self)
    }
}

/// Serialized form used in state files: `{"d": int, "c": [...], "id": "..."}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub d: usize,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl StateRecord {
    pub fn from_state(s: &BellDiagonalState, id: Option<String>) -> Self {
        Self { d: s.d, c: s.c.clone(), id }
    }

    pub fn to_state(&self) -> Result<BellDiagonalState> {
        BellDiagonalState::new(self.d, self.c.clone())
    }
}

pub fn write_states(path: &Path, states: &[BellDiagonalState]) -> Result<()> {
    let records: Vec<StateRecord> = states
        .iter()
        .enumerate()
        .map(|(i, s)| StateRecord::from_state(s, Some(format!("s{i}"))))
        .collect();
    io::write_jsonl(path, &records)
}

pub fn read_state_records(path: &Path) -> Result<Vec<StateRecord>> {
    io::read_jsonl(path)
}

/// `ρ = Σ c_{k,l} P_{k,l}` assembled from the Bell projectors.
pub fn density_matrix(s: &BellDiagonalState) -> ComplexMatrix {
    let d = s.d;
    let mut rho = ComplexMatrix::zeros(d * d, d * d);
    for k in 0..d {
        for l in 0..d {
            let ckl = s.coord(k, l);
            if ckl == 0.0 {
                continue;
            }
            let v = weyl::bell_vector(d, k, l).expect("indices in range");
            for (i, vi) in v.iter().enumerate() {
                if vi.norm_sqr() == 0.0 {
                    continue;
                }
                for (j, vj) in v.iter().enumerate() {
                    if vj.norm_sqr() == 0.0 {
                        continue;
                    }
                    let cur = rho.get(i, j);
                    rho.set(i, j, cur + vi * vj.conj() * ckl);
                }
            }
        }
    }
    rho
}

/// Reads the Bell-basis diagonal `tr[P_{k,l} ρ]` of an arbitrary bipartite
/// operator.
pub fn bell_coefficients(d: usize, rho: &ComplexMatrix) -> Result<Vec<f64>> {
    if rho.rows() != d * d || rho.cols() != d * d {
        return Err(Error::Shape("bell coefficients need a d²×d² operator".into()));
    }
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            let v = weyl::bell_vector(d, k, l)?;
            let rv = rho.apply(&v);
            let z: Complex64 = v.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum();
            out.push(z.re);
        }
    }
    Ok(out)
}

pub fn in_enclosure(s: &BellDiagonalState) -> bool {
    let bound = 1.0 / s.d as f64 + ENCLOSURE_EPS;
    s.c.iter().all(|&x| x <= bound)
}

/// Uniform draw from the simplex: normalized i.i.d. unit exponentials.
pub fn sample_simplex<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<BellDiagonalState> {
    check_dimension(d)?;
    let mut c: Vec<f64> = (0..d * d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = c.iter().sum();
    for x in &mut c {
        *x /= sum;
    }
    Ok(BellDiagonalState { d, c })
}

/// Uniform draw from the enclosure polytope by simplex rejection. Also returns
/// the number of proposals consumed.
pub fn sample_enclosure_counted<R: Rng + ?Sized>(
    d: usize,
    rng: &mut R,
) -> Result<(BellDiagonalState, u64)> {
    let mut proposals = 0;
    loop {
        proposals += 1;
        let s = sample_simplex(d, rng)?;
        if in_enclosure(&s) {
            return Ok((s, proposals));
        }
    }
}

pub fn sample_enclosure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<BellDiagonalState> {
    Ok(sample_enclosure_counted(d, rng)?.0)
}

/// Fraction of `n` simplex proposals that land in the enclosure polytope.
pub fn enclosure_acceptance_rate<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<f64> {
    let mut hits = 0usize;
    for _ in 0..n {
        if in_enclosure(&sample_simplex(d, rng)?) {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Vertex of the kernel polytope: the equal mixture over one coset.
#[derive(Clone, Debug)]
pub struct KernelVertex {
    pub id: usize,
    pub subgroup: PhaseSubgroup,
    pub state: BellDiagonalState,
}

/// One kernel vertex per coset of every order-`d` subgroup, in coset order.
pub fn kernel_vertices(d: usize) -> Result<Vec<KernelVertex>> {
    Ok(weyl::enumerate_cosets(d)?
        .into_iter()
        .enumerate()
        .map(|(id, subgroup)| KernelVertex {
            id,
            state: BellDiagonalState::subgroup_state(&subgroup),
            subgroup,
        })
        .collect())
}

/// `⟨Ω_{k,l}| a ⊗ b⟩` for all `(k,l)`, flattened.
pub(crate) fn bell_overlaps(d: usize, a: &[Complex64], b: &[Complex64], roots: &[Complex64]) -> Vec<Complex64> {
    let norm = 1.0 / (d as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        for l in 0..d {
            let mut z = Complex64::new(0.0, 0.0);
            for j in 0..d {
                // w^{-jk}
                z += roots[(d - (j * k) % d) % d] * a[j] * b[(j + l) % d];
            }
            out[k * d + l] = z * norm;
        }
    }
    out
}

/// Bell-diagonal projection (twirl) of the product state `|a⟩⊗|b⟩`:
/// `c_{k,l} = |⟨Ω_{k,l}|a⊗b⟩|²`. The result is separable by construction.
pub fn twirled_product(d: usize, a: &[Complex64], b: &[Complex64]) -> Vec<f64> {
    let roots: Vec<Complex64> = (0..d as i64).map(|n| root_of_unity(d, n)).collect();
    bell_overlaps(d, a, b, &roots).iter().map(|z| z.norm_sqr()).collect()
}
