use num_complex::Complex64;

use crate::state::BellDiagonalState;
use crate::weyl::roots_of_unity;

/// Trace norm of the realigned density matrix.
///
/// The realigned matrix of `Σ c_{k,l} P_{k,l}` is unitarily equivalent to a
/// diagonal matrix carrying the two-dimensional discrete Fourier transform of
/// `c` scaled by `1/d`, so the trace norm is `(1/d) Σ_{p,q} |ĉ(p,q)|`.
pub fn realignment_sum(s: &BellDiagonalState) -> f64 {
    let d = s.d();
    let roots = roots_of_unity(d);
    // transform over l first, then over k
    let mut partial = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        for q in 0..d {
            partial[k * d + q] = (0..d).map(|l| roots[(q * l) % d] * s.coord(k, l)).sum();
        }
    }
    let mut total = 0.0;
    for p in 0..d {
        for q in 0..d {
            let z: Complex64 = (0..d).map(|k| roots[(p * k) % d] * partial[k * d + q]).sum();
            total += z.norm();
        }
    }
    total / d as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::state::{density_matrix, kernel_vertices, sample_simplex};

    fn dense(s: &BellDiagonalState) -> f64 {
        density_matrix(s).realign(s.d()).unwrap().trace_norm().unwrap()
    }

    #[test]
    fn examples() {
        let u = BellDiagonalState::uniform(3).unwrap();
        assert!((realignment_sum(&u) - 1.0 / 3.0).abs() < 1e-12);
        assert!((dense(&u) - 1.0 / 3.0).abs() < 1e-10);
        for d in 2..=5 {
            let p = BellDiagonalState::indicator(d, 0, 0).unwrap();
            assert!((realignment_sum(&p) - d as f64).abs() < 1e-10);
            assert!((dense(&p) - d as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_vertices_pass() {
        for d in 2..=4 {
            for v in kernel_vertices(d).unwrap() {
                assert!(realignment_sum(&v.state) <= 1.0 + 1e-10);
            }
        }
    }

    #[test]
    fn fourier_route_matches_dense_svd() {
        let mut r = rng::stream(12, &[]);
        for d in 2..=4 {
            for _ in 0..8 {
                let s = sample_simplex(d, &mut r).unwrap();
                assert!((realignment_sum(&s) - dense(&s)).abs() < 1e-9, "d={d}");
            }
        }
    }
}
