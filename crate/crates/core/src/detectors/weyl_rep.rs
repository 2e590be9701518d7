use num_complex::Complex64;

use super::ppt::column_transforms;
use crate::state::BellDiagonalState;
use crate::weyl::roots_of_unity;

/// All `d⁴` coefficients `s_{μ,ν} = tr[(W_μ ⊗ W_ν)† ρ]`, flattened as
/// `(μ_flat * d² + ν_flat)` with `μ = (k1,l1)`, `ν = (k2,l2)`.
pub fn weyl_coefficients(s: &BellDiagonalState) -> Vec<Complex64> {
    let d = s.d();
    let roots = roots_of_unity(d);
    let f = column_transforms(s);
    let inv_d = 1.0 / d as f64;
    let d2 = d * d;
    let mut out = vec![Complex64::new(0.0, 0.0); d2 * d2];
    for k1 in 0..d {
        for l in 0..d {
            // W_μ ⊗ W_ν only meets the support of ρ when both shifts agree
            let delta = (d - l) % d;
            for k2 in 0..d {
                let mut z = Complex64::new(0.0, 0.0);
                for j1 in 0..d {
                    for j2 in 0..d {
                        let phase = roots[(d * d - (j1 * k1 + j2 * k2) % d) % d];
                        z += phase * f[((d + j2 - j1) % d) * d + delta];
                    }
                }
                out[(k1 * d + l) * d2 + k2 * d + l] = z * inv_d;
            }
        }
    }
    out
}

/// `Σ_{μ,ν} |s_{μ,ν}|`.
pub fn weyl_representation_sum(s: &BellDiagonalState) -> f64 {
    weyl_coefficients(s).iter().map(|z| z.norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::realignment_sum;
    use crate::rng;
    use crate::state::{density_matrix, sample_simplex};
    use crate::weyl::weyl_operator;

    #[test]
    fn examples() {
        for d in 2..=4 {
            let u = BellDiagonalState::uniform(d).unwrap();
            assert!((weyl_representation_sum(&u) - 1.0).abs() < 1e-12);
        }
        let p = BellDiagonalState::indicator(2, 0, 0).unwrap();
        assert!((weyl_representation_sum(&p) - 4.0).abs() < 1e-12);
        let half = BellDiagonalState::normalized(2, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((weyl_representation_sum(&half) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_traces() {
        let mut r = rng::stream(14, &[]);
        for d in 2..=3 {
            let s = sample_simplex(d, &mut r).unwrap();
            let rho = density_matrix(&s);
            let fast = weyl_coefficients(&s);
            let d2 = d * d;
            for mu in 0..d2 {
                for nu in 0..d2 {
                    let op = weyl_operator(d, mu / d, mu % d)
                        .unwrap()
                        .kron(&weyl_operator(d, nu / d, nu % d).unwrap());
                    let z = (&op.adjoint() * &rho).trace();
                    assert!((z - fast[mu * d2 + nu]).norm() < 1e-12, "d={d} mu={mu} nu={nu}");
                }
            }
        }
    }

    #[test]
    fn sum_is_d_times_realignment_norm() {
        let mut r = rng::stream(15, &[]);
        for d in 2..=5 {
            let s = sample_simplex(d, &mut r).unwrap();
            let lhs = weyl_representation_sum(&s);
            assert!((lhs - d as f64 * realignment_sum(&s)).abs() < 1e-10);
        }
    }
}
