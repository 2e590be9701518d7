use num_complex::Complex64;

use crate::error::{check_dimension, Error, Result};
use crate::matrix::ComplexMatrix;
use crate::state::{twirled_product, BellDiagonalState};
use crate::weyl::root_of_unity;

const UNBIASED_TOL: f64 = 1e-10;

/// A complete set of `d + 1` mutually unbiased bases; basis vectors are the
/// matrix columns.
#[derive(Clone, Debug)]
pub struct MubSet {
    d: usize,
    bases: Vec<ComplexMatrix>,
}

impl MubSet {
    pub fn new(d: usize, bases: Vec<ComplexMatrix>) -> Result<Self> {
        check_dimension(d)?;
        if bases.len() != d + 1 {
            return Err(Error::InvalidMubSet(format!("expected {} bases, got {}", d + 1, bases.len())));
        }
        for (n, b) in bases.iter().enumerate() {
            if b.rows() != d || b.cols() != d {
                return Err(Error::InvalidMubSet(format!("basis {n} is not {d}x{d}")));
            }
            let gram = &b.adjoint() * b;
            if !gram.approx_eq(&ComplexMatrix::identity(d), UNBIASED_TOL) {
                return Err(Error::InvalidMubSet(format!("basis {n} is not orthonormal")));
            }
        }
        let target = 1.0 / d as f64;
        for x in 0..bases.len() {
            for y in x + 1..bases.len() {
                let overlap = &bases[x].adjoint() * &bases[y];
                if overlap.as_slice().iter().any(|z| (z.norm_sqr() - target).abs() > UNBIASED_TOL) {
                    return Err(Error::InvalidMubSet(format!("bases {x} and {y} are not unbiased")));
                }
            }
        }
        Ok(Self { d, bases })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn bases(&self) -> &[ComplexMatrix] {
        &self.bases
    }
}

/// Shift used for the first basis: 2 for `d = 3`, 3 for `d = 4`.
pub fn default_mub_shift(d: usize) -> Result<usize> {
    match d {
        3 => Ok(2),
        4 => Ok(3),
        _ => Err(Error::UnsupportedMubDimension(d)),
    }
}

fn basis(d: usize, scale: f64, entries: &[Complex64]) -> ComplexMatrix {
    let data = entries.iter().map(|z| z * scale).collect();
    ComplexMatrix::from_row_major(d, d, data).expect("static basis has d*d finite entries")
}

/// The non-decomposable MUB sets for `d = 3` and `d = 4`.
pub fn standard_mubs(d: usize) -> Result<MubSet> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let bases = match d {
        3 => {
            let w = root_of_unity(3, 1);
            let w2 = root_of_unity(3, 2);
            let s = 1.0 / 3f64.sqrt();
            vec![
                ComplexMatrix::identity(3),
                basis(3, s, &[one, one, one, one, w, w2, one, w2, w]),
                basis(3, s, &[one, one, one, w, w2, one, w, one, w2]),
                basis(3, s, &[one, one, one, w2, one, w, w2, w, one]),
            ]
        }
        4 => {
            let m = -one;
            let mi = -i;
            vec![
                ComplexMatrix::identity(4),
                basis(4, 0.5, &[one, one, one, one, one, one, m, m, one, m, m, one, one, m, one, m]),
                basis(4, 0.5, &[one, one, one, one, mi, mi, i, i, mi, i, i, mi, m, one, m, one]),
                basis(4, 0.5, &[one, one, one, one, m, m, one, one, mi, i, i, mi, mi, i, mi, i]),
                basis(4, 0.5, &[one, one, one, one, mi, mi, i, i, m, one, one, m, mi, i, mi, i]),
            ]
        }
        _ => return Err(Error::UnsupportedMubDimension(d)),
    };
    MubSet::new(d, bases)
}

fn conj(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| z.conj()).collect()
}

/// `I_{d+1} = Σ_k C_k`: the first basis is paired with the conjugate of its
/// `shift`-rotated partner, every other basis with its own conjugate.
pub fn mub_sum(s: &BellDiagonalState, mubs: &MubSet, shift: usize) -> Result<f64> {
    let d = s.d();
    if mubs.d() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: mubs.d() });
    }
    if shift >= d {
        return Err(Error::InvalidArgument(format!("shift {shift} must be below {d}")));
    }
    let c = s.coords();
    let expectation = |x: &[Complex64], y: &[Complex64]| -> f64 {
        twirled_product(d, x, y).iter().zip(c).map(|(t, ci)| t * ci).sum()
    };
    let mut total = 0.0;
    for (n, b) in mubs.bases().iter().enumerate() {
        for col in 0..d {
            let x = b.column(col);
            let partner = if n == 0 { b.column((col + shift) % d) } else { x.clone() };
            total += expectation(&x, &conj(&partner));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::state::{density_matrix, sample_simplex};

    fn dense(s: &BellDiagonalState, mubs: &MubSet, shift: usize) -> f64 {
        let d = s.d();
        let rho = density_matrix(s);
        let mut total = 0.0;
        for (n, b) in mubs.bases().iter().enumerate() {
            for col in 0..d {
                let x = b.column(col);
                let y = if n == 0 { conj(&b.column((col + shift) % d)) } else { conj(&x) };
                let v: Vec<Complex64> =
                    x.iter().flat_map(|xi| y.iter().map(move |yj| xi * yj)).collect();
                let rv = rho.apply(&v);
                total += v.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum::<Complex64>().re;
            }
        }
        total
    }

    #[test]
    fn appendix_sets_are_unbiased() {
        assert_eq!(standard_mubs(3).unwrap().bases().len(), 4);
        assert_eq!(standard_mubs(4).unwrap().bases().len(), 5);
        assert!(matches!(standard_mubs(5), Err(Error::UnsupportedMubDimension(5))));
    }

    #[test]
    fn rejects_biased_set() {
        let bases = vec![ComplexMatrix::identity(3); 4];
        assert!(matches!(MubSet::new(3, bases), Err(Error::InvalidMubSet(_))));
    }

    #[test]
    fn examples() {
        let mubs = standard_mubs(3).unwrap();
        let u = BellDiagonalState::uniform(3).unwrap();
        assert!((mub_sum(&u, &mubs, 2).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        let p = BellDiagonalState::indicator(3, 0, 0).unwrap();
        assert!((mub_sum(&p, &mubs, 0).unwrap() - 4.0).abs() < 1e-12);
        let p4 = BellDiagonalState::indicator(4, 0, 0).unwrap();
        assert!((mub_sum(&p4, &standard_mubs(4).unwrap(), 0).unwrap() - 5.0).abs() < 1e-12);
        assert!(mub_sum(&u, &mubs, 3).is_err());
    }

    #[test]
    fn twirl_route_matches_dense() {
        let mut r = rng::stream(13, &[]);
        for d in [3, 4] {
            let mubs = standard_mubs(d).unwrap();
            for shift in 0..d {
                let s = sample_simplex(d, &mut r).unwrap();
                assert!((mub_sum(&s, &mubs, shift).unwrap() - dense(&s, &mubs, shift)).abs() < 1e-12);
            }
        }
    }
}
