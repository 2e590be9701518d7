#![allow(dead_code)]

use magic_simplex::hull::Certificate;
use magic_simplex::matrix::ComplexMatrix;
use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;

/// Draws the first `d² - 1` coordinates uniformly in `[0, 1]` until their sum
/// is at most one; the last coordinate takes the rest.
pub fn rejection_sample<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let n = d * d;
    loop {
        let head: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
        let s: f64 = head.iter().sum();
        if s <= 1.0 {
            let mut c = head;
            c.push(1.0 - s);
            return c;
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut dmax) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        dmax = dmax.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    dmax
}

/// Smallest L1 residual `|Σ λ_i v_i - c|₁` over the probability simplex of
/// weights, by linear programming. Zero iff `c` is in the convex hull.
pub fn lp_hull_residual(vertices: &[Vec<f64>], c: &[f64]) -> f64 {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let lam: Vec<_> = vertices.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let plus: Vec<_> = c.iter().map(|_| p.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let minus: Vec<_> = c.iter().map(|_| p.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for (i, &ci) in c.iter().enumerate() {
        let mut row: Vec<_> = lam.iter().zip(vertices).map(|(&v, vx)| (v, vx[i])).collect();
        row.push((plus[i], 1.0));
        row.push((minus[i], -1.0));
        p.add_constraint(row, ComparisonOp::Eq, ci);
    }
    p.add_constraint(lam.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    match p.solve().expect("LP with slack is always feasible") {
        SolveOutcome::Solution(sol) => sol.objective(),
        SolveOutcome::Interrupted(_) => panic!("LP interrupted"),
    }
}

/// `Σ_j w_j |a_j⟩⟨a_j| ⊗ |b_j⟩⟨b_j|` built with dense Kronecker products.
pub fn dense_certificate_state(d: usize, cert: &Certificate) -> ComplexMatrix {
    let mut rho = ComplexMatrix::zeros(d * d, d * d);
    for ((w, a), b) in cert.weights.iter().zip(&cert.a).zip(&cert.b) {
        let unit = |v: &[[f64; 2]]| {
            let v: Vec<Complex64> = v.iter().map(|z| Complex64::new(z[0], z[1])).collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect::<Vec<_>>()
        };
        let (a, b) = (unit(a), unit(b));
        let pa = ComplexMatrix::outer(&a, &a);
        let pb = ComplexMatrix::outer(&b, &b);
        rho = &rho + &pa.kron(&pb).scale(Complex64::new(*w, 0.0));
    }
    rho
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    SymmetricEigen::new(m.to_nalgebra()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
