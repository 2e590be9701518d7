use std::collections::HashSet;

use magic_simplex::detectors::standard_mubs;
use magic_simplex::matrix::ComplexMatrix;
use magic_simplex::state::{bell_coefficients, density_matrix, sample_simplex, BellDiagonalState};
use magic_simplex::symmetry::SymmetryGroup;
use magic_simplex::weyl::{
    bell_projector, enumerate_cosets, enumerate_order_d_subgroups, root_of_unity, weyl_operator, PhasePoint,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn phase(d: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (n % d) as f64 / d as f64)
}

fn indices() -> impl Strategy<Value = (usize, usize, usize, usize, usize)> {
    (2usize..=5).prop_flat_map(|d| (Just(d), 0..d, 0..d, 0..d, 0..d))
}

proptest! {
    #[test]
    fn weyl_product_relation((d, k1, l1, k2, l2) in indices()) {
        let lhs = &weyl_operator(d, k1, l1).unwrap() * &weyl_operator(d, k2, l2).unwrap();
        let rhs = weyl_operator(d, (k1 + k2) % d, (l1 + l2) % d).unwrap().scale(phase(d, l1 * k2));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn weyl_adjoint_relation((d, k, l, _, _) in indices()) {
        let w = weyl_operator(d, k, l).unwrap();
        let adj = w.adjoint();
        let rhs = weyl_operator(d, (d - k) % d, (d - l) % d).unwrap().scale(phase(d, k * l));
        prop_assert!(adj.max_abs_diff(&rhs) < 1e-12);
        prop_assert!((&adj * &w).max_abs_diff(&ComplexMatrix::identity(d)) < 1e-12);
    }

    #[test]
    fn density_matrix_is_affine(d in 2usize..=4, seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let mut r = magic_simplex::rng::stream(seed, &[]);
        let a = sample_simplex(d, &mut r).unwrap();
        let b = sample_simplex(d, &mut r).unwrap();
        let mix = a.mix(&b, lambda).unwrap();
        let lhs = density_matrix(&mix);
        let rhs = &density_matrix(&a).scale(Complex64::new(lambda, 0.0))
            + &density_matrix(&b).scale(Complex64::new(1.0 - lambda, 0.0));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn bell_coefficients_round_trip(d in 2usize..=4, seed in any::<u64>()) {
        let s = sample_simplex(d, &mut magic_simplex::rng::stream(seed, &[])).unwrap();
        let back = bell_coefficients(d, &density_matrix(&s)).unwrap();
        for (x, y) in back.iter().zip(s.coords()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn root_of_unity_matches_phase() {
    for d in 2..=5 {
        for n in 0..2 * d {
            assert!((root_of_unity(d, n as i64) - phase(d, n)).norm() < 1e-14);
        }
    }
}

#[test]
fn bell_projectors_are_orthonormal_and_complete() {
    for d in 2..=5 {
        let mut sum = ComplexMatrix::zeros(d * d, d * d);
        let ps: Vec<ComplexMatrix> =
            (0..d * d).map(|i| bell_projector(d, i / d, i % d).unwrap()).collect();
        for (i, p) in ps.iter().enumerate() {
            sum = &sum + p;
            for (j, q) in ps.iter().enumerate() {
                let t = (p * q).trace();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((t - Complex64::new(expect, 0.0)).norm() < 1e-12, "d={d} ({i},{j})");
            }
        }
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(d * d)) < 1e-12);
    }
}

fn brute_force_subgroups(d: usize) -> HashSet<Vec<usize>> {
    // every subgroup of order d is generated by at most two elements
    let pts: Vec<PhasePoint> = (0..d * d).map(|i| PhasePoint::from_flat(d, i)).collect();
    let mut out = HashSet::new();
    for g in &pts {
        for h in &pts {
            let mut set: HashSet<usize> = HashSet::from([0]);
            loop {
                let snapshot: Vec<usize> = set.iter().copied().collect();
                let before = set.len();
                for &x in &snapshot {
                    let p = PhasePoint::from_flat(d, x);
                    set.insert(p.add(g).flat());
                    set.insert(p.add(h).flat());
                }
                if set.len() == before {
                    break;
                }
            }
            if set.len() == d {
                let mut v: Vec<usize> = set.into_iter().collect();
                v.sort();
                out.insert(v);
            }
        }
    }
    out
}

#[test]
fn subgroups_match_brute_force_and_are_closed() {
    for (d, subgroups, cosets) in [(2, 3, 6), (3, 4, 12), (4, 7, 28)] {
        let found = enumerate_order_d_subgroups(d).unwrap();
        assert_eq!(found.len(), subgroups);
        let keys: HashSet<Vec<usize>> = found
            .iter()
            .map(|g| {
                let mut v = g.flat_indices();
                v.sort();
                v
            })
            .collect();
        assert_eq!(keys, brute_force_subgroups(d));
        for g in &found {
            for p in &g.points {
                for q in &g.points {
                    assert!(g.contains(&p.add(q)));
                }
            }
        }
        let cs = enumerate_cosets(d).unwrap();
        assert_eq!(cs.len(), cosets);
        assert_eq!(cs.len(), subgroups * d);
        let distinct: HashSet<Vec<usize>> = cs
            .iter()
            .map(|c| {
                let mut v = c.flat_indices();
                v.sort();
                v
            })
            .collect();
        assert_eq!(distinct.len(), cosets);
    }
}

#[test]
fn group_axioms_hold_exhaustively() {
    for (d, order) in [(2, 24), (3, 432)] {
        let g = SymmetryGroup::generate(d).unwrap();
        assert_eq!(g.len(), order);
        let index = g.index_map();
        assert!(g.elements().iter().any(|e| e.is_identity()));
        for a in g.elements() {
            assert!(index.contains_key(a.inverse().perm()));
            assert!(a.compose(&a.inverse()).is_identity());
            for b in g.elements() {
                assert!(index.contains_key(a.compose(b).perm()));
            }
        }
    }
    assert_eq!(SymmetryGroup::generate(4).unwrap().len(), 1536);
}

#[test]
fn appendix_mubs_are_unbiased() {
    for d in [3, 4] {
        let m = standard_mubs(d).unwrap();
        assert_eq!(m.bases().len(), d + 1);
        for (i, x) in m.bases().iter().enumerate() {
            for (j, y) in m.bases().iter().enumerate() {
                let g = &x.adjoint() * y;
                for r in 0..d {
                    for c in 0..d {
                        let v = g.get(r, c).norm_sqr();
                        let expect = if i == j {
                            if r == c { 1.0 } else { 0.0 }
                        } else {
                            1.0 / d as f64
                        };
                        assert!((v - expect).abs() < 1e-10, "d={d} bases ({i},{j})");
                    }
                }
            }
        }
    }
}

#[test]
fn sampled_states_have_maximally_mixed_marginals() {
    let mut r = magic_simplex::rng::stream(9, &[]);
    for _ in 0..20 {
        let s = sample_simplex(3, &mut r).unwrap();
        let rho = density_matrix(&s);
        let third = ComplexMatrix::identity(3).scale(Complex64::new(1.0 / 3.0, 0.0));
        assert!(rho.partial_trace_first(3).unwrap().max_abs_diff(&third) < 1e-12);
        assert!(rho.partial_trace_second(3).unwrap().max_abs_diff(&third) < 1e-12);
    }
    let u = density_matrix(&BellDiagonalState::uniform(3).unwrap());
    assert!(u.max_abs_diff(&ComplexMatrix::identity(9).scale(Complex64::new(1.0 / 9.0, 0.0))) < 1e-14);
}
