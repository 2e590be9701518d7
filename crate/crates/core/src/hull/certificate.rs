use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::state::{density_matrix, BellDiagonalState};
use crate::weyl::weyl_operator;

/// Explicit separable decomposition `Σ p_j (a_j a_j†) ⊗ (b_j b_j†)`. Vectors
/// are stored as `[re, im]` component arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub weights: Vec<f64>,
    pub a: Vec<Vec<[f64; 2]>>,
    pub b: Vec<Vec<[f64; 2]>>,
}

fn pack(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpack(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|z| Complex64::new(z[0], z[1])).collect()
}

impl Certificate {
    /// Decomposition of the twirled product state of `(a, b)` into the `d²`
    /// product states `(W_{p,q} a) ⊗ (W_{p,q}* b)` with equal weights.
    pub fn twirl_orbit(d: usize, a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        Self::mixture(d, &[(1.0, a.to_vec(), b.to_vec())])
    }

    /// Twirl-orbit decompositions of several product pairs, mixed with the
    /// given weights.
    pub fn mixture(d: usize, parts: &[(f64, Vec<Complex64>, Vec<Complex64>)]) -> Result<Self> {
        let n = (d * d) as f64;
        let mut out = Self { weights: Vec::new(), a: Vec::new(), b: Vec::new() };
        for p in 0..d {
            for q in 0..d {
                let w = weyl_operator(d, p, q)?;
                let wc = w.conj();
                for (weight, a, b) in parts {
                    if a.len() != d || b.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, actual: a.len().min(b.len()) });
                    }
                    out.weights.push(weight / n);
                    out.a.push(pack(&w.apply(a)));
                    out.b.push(pack(&wc.apply(b)));
                }
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dense `Σ p_j (a_j a_j†) ⊗ (b_j b_j†)`; product vectors are normalized
    /// before use.
    pub fn reconstruct(&self, d: usize) -> Result<ComplexMatrix> {
        if self.a.len() != self.weights.len() || self.b.len() != self.weights.len() {
            return Err(Error::Certification("certificate arrays differ in length".into()));
        }
        let mut rho = ComplexMatrix::zeros(d * d, d * d);
        for ((w, a), b) in self.weights.iter().zip(&self.a).zip(&self.b) {
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::Certification("negative or non-finite weight".into()));
            }
            let (mut a, mut b) = (unpack(a), unpack(b));
            if a.len() != d || b.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: a.len().min(b.len()) });
            }
            for v in [&mut a, &mut b] {
                let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if n == 0.0 {
                    return Err(Error::Certification("zero product vector".into()));
                }
                v.iter_mut().for_each(|z| *z /= n);
            }
            let v: Vec<Complex64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
            for (i, vi) in v.iter().enumerate() {
                for (j, vj) in v.iter().enumerate() {
                    let cur = rho.get(i, j);
                    rho.set(i, j, cur + vi * vj.conj() * *w);
                }
            }
        }
        Ok(rho)
    }

    /// Frobenius distance between the decomposition and `density_matrix(s)`,
    /// including any deviation of the weights from a probability vector.
    pub fn residual(&self, s: &BellDiagonalState) -> Result<f64> {
        let rho = self.reconstruct(s.d())?;
        let diff = &rho - &density_matrix(s);
        let total: f64 = self.weights.iter().sum();
        Ok(diff.frobenius_norm().max((total - 1.0).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::state::twirled_product;
    use rand::Rng;

    #[test]
    fn twirl_orbit_reproduces_twirled_state() {
        let mut r = rng::stream(41, &[]);
        for d in 2..=4 {
            let a: Vec<Complex64> = (0..d).map(|_| Complex64::new(r.random(), r.random())).collect();
            let b: Vec<Complex64> = (0..d).map(|_| Complex64::new(r.random(), r.random())).collect();
            let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let a: Vec<Complex64> = a.iter().map(|z| z / na).collect();
            let b: Vec<Complex64> = b.iter().map(|z| z / nb).collect();
            let s = BellDiagonalState::new(d, twirled_product(d, &a, &b)).unwrap();
            let cert = Certificate::twirl_orbit(d, &a, &b).unwrap();
            assert_eq!(cert.len(), d * d);
            assert!(cert.residual(&s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn wrong_state_has_large_residual() {
        let e0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let cert = Certificate::twirl_orbit(2, &e0, &e0).unwrap();
        let p = BellDiagonalState::indicator(2, 0, 0).unwrap();
        assert!(cert.residual(&p).unwrap() > 0.1);
    }
}
