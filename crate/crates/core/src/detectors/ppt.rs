use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::matrix::hermitian_eigenvalues;
use crate::state::BellDiagonalState;
use crate::weyl::roots_of_unity;

/// `F_l(δ) = Σ_k c_{k,l} w^{kδ}`, indexed `[l * d + δ]`.
pub(crate) fn column_transforms(s: &BellDiagonalState) -> Vec<Complex64> {
    let d = s.d();
    let roots = roots_of_unity(d);
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for l in 0..d {
        for delta in 0..d {
            out[l * d + delta] = (0..d).map(|k| roots[(k * delta) % d] * s.coord(k, l)).sum();
        }
    }
    out
}

/// The partial transpose of a Bell-diagonal state is block diagonal: basis
/// vectors `|a⟩|b⟩` with `a + b ≡ t (mod d)` only couple among themselves.
/// Returns the `d` blocks, block `t` indexed by the first-factor label `a`.
pub fn partial_transpose_blocks(s: &BellDiagonalState) -> Vec<DMatrix<Complex64>> {
    let d = s.d();
    let f = column_transforms(s);
    let inv_d = 1.0 / d as f64;
    (0..d)
        .map(|t| {
            DMatrix::from_fn(d, d, |a, ap| {
                let l = (2 * d + t - a - ap) % d;
                let delta = (d + a - ap) % d;
                f[l * d + delta] * inv_d
            })
        })
        .collect()
}

/// Smallest eigenvalue of `ρ^Γ`.
pub fn ppt_min_eigenvalue(s: &BellDiagonalState) -> Result<f64> {
    let mut min = f64::INFINITY;
    for block in partial_transpose_blocks(s) {
        let ev = hermitian_eigenvalues(block)?;
        min = min.min(ev[0]);
    }
    Ok(min)
}
