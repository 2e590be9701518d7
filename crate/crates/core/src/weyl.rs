//! Weyl operators, Bell states and the subgroup structure of the discrete
//! phase space `Z_d × Z_d`.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};
use crate::matrix::ComplexMatrix;

/// `w^n` with `w = exp(2πi/d)`; the exponent is reduced mod `d` first so that
/// equal phases are bit-identical.
#[inline]
pub fn root_of_unity(d: usize, n: i64) -> Complex64 {
    let r = n.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, TAU * r / d as f64)
}

/// Table of `w^n` for `n = 0..d`.
pub fn roots_of_unity(d: usize) -> Vec<Complex64> {
    (0..d as i64).map(|n| root_of_unity(d, n)).collect()
}

/// A point `(k, l)` of the discrete phase space; arithmetic is mod `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhasePoint {
    pub k: usize,
    pub l: usize,
    pub d: usize,
}

impl PhasePoint {
    pub fn new(d: usize, k: usize, l: usize) -> Result<Self> {
        check_dimension(d)?;
        if k >= d || l >= d {
            return Err(Error::IndexOutOfRange { d, k, l });
        }
        Ok(Self { k, l, d })
    }

    pub fn origin(d: usize) -> Self {
        Self { k: 0, l: 0, d }
    }

    pub fn from_flat(d: usize, idx: usize) -> Self {
        Self { k: idx / d, l: idx % d, d }
    }

    /// Flattened coordinate index `k * d + l`.
    #[inline]
    pub fn flat(&self) -> usize {
        self.k * self.d + self.l
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self {
            k: (self.k + other.k) % self.d,
            l: (self.l + other.l) % self.d,
            d: self.d,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            k: (self.d - self.k) % self.d,
            l: (self.d - self.l) % self.d,
            d: self.d,
        }
    }

    pub fn times(&self, n: usize) -> Self {
        Self {
            k: (self.k * n) % self.d,
            l: (self.l * n) % self.d,
            d: self.d,
        }
    }

    /// Additive order of the point in `Z_d × Z_d`.
    pub fn order(&self) -> usize {
        (1..=self.d).find(|&n| self.times(n).flat() == 0).unwrap_or(self.d)
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.l)
    }
}

/// `W_{k,l} = Σ_j w^{jk} |j⟩⟨j+l mod d|`.
pub fn weyl_operator(d: usize, k: usize, l: usize) -> Result<ComplexMatrix> {
    PhasePoint::new(d, k, l)?;
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        m.set(j, (j + l) % d, root_of_unity(d, (j * k) as i64));
    }
    Ok(m)
}

/// Amplitudes of `|Ω_{k,l}⟩ = (W_{k,l} ⊗ 1)|Ω_00⟩ = d^{-1/2} Σ_j w^{jk} |j⟩|j+l⟩`,
/// indexed `i * d + m` for `|i⟩|m⟩`.
pub fn bell_vector(d: usize, k: usize, l: usize) -> Result<Vec<Complex64>> {
    PhasePoint::new(d, k, l)?;
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        v[j * d + (j + l) % d] = root_of_unity(d, (j * k) as i64) * norm;
    }
    Ok(v)
}

/// `P_{k,l} = |Ω_{k,l}⟩⟨Ω_{k,l}|`.
pub fn bell_projector(d: usize, k: usize, l: usize) -> Result<ComplexMatrix> {
    let v = bell_vector(d, k, l)?;
    Ok(ComplexMatrix::outer(&v, &v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubgroupKind {
    /// cyclic subgroup, generated by one Weyl index
    Line,
    /// non-cyclic subgroup; only exists for composite `d`
    Sublattice,
}

/// An order-`d` subgroup of `Z_d × Z_d`, or one of its cosets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSubgroup {
    pub d: usize,
    /// sorted by flat index
    pub points: Vec<PhasePoint>,
    pub kind: SubgroupKind,
    pub is_coset: bool,
    pub shift: PhasePoint,
}

impl PhaseSubgroup {
    pub fn flat_indices(&self) -> Vec<usize> {
        self.points.iter().map(PhasePoint::flat).collect()
    }

    pub fn contains(&self, p: &PhasePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// The same subgroup translated by `shift`.
    pub fn translated(&self, shift: PhasePoint) -> PhaseSubgroup {
        let mut points: Vec<PhasePoint> = self.points.iter().map(|p| p.add(&shift)).collect();
        points.sort();
        let is_coset = points[0].flat() != 0;
        PhaseSubgroup {
            d: self.d,
            shift: if is_coset { points[0] } else { PhasePoint::origin(self.d) },
            points,
            kind: self.kind,
            is_coset,
        }
    }
}

fn generated_subgroup(g: PhasePoint, h: PhasePoint) -> BTreeSet<PhasePoint> {
    let d = g.d;
    let mut set = BTreeSet::new();
    for i in 0..d {
        for j in 0..d {
            set.insert(g.times(i).add(&h.times(j)));
        }
    }
    set
}

/// All subgroups of `Z_d × Z_d` with exactly `d` elements, ordered by their
/// sorted flat index lists.
pub fn enumerate_order_d_subgroups(d: usize) -> Result<Vec<PhaseSubgroup>> {
    check_dimension(d)?;
    let all: Vec<PhasePoint> = (0..d * d).map(|i| PhasePoint::from_flat(d, i)).collect();
    let mut found: BTreeSet<Vec<PhasePoint>> = BTreeSet::new();
    for (gi, g) in all.iter().enumerate() {
        for h in &all[gi..] {
            let sub = generated_subgroup(*g, *h);
            if sub.len() == d {
                found.insert(sub.into_iter().collect());
            }
        }
    }
    Ok(found
        .into_iter()
        .map(|points| {
            let cyclic = points.iter().any(|p| p.order() == d);
            PhaseSubgroup {
                d,
                points,
                kind: if cyclic { SubgroupKind::Line } else { SubgroupKind::Sublattice },
                is_coset: false,
                shift: PhasePoint::origin(d),
            }
        })
        .collect())
}

/// All distinct cosets of all order-`d` subgroups (subgroups included), ordered
/// by their sorted flat index lists.
pub fn enumerate_cosets(d: usize) -> Result<Vec<PhaseSubgroup>> {
    let subgroups = enumerate_order_d_subgroups(d)?;
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    for sg in &subgroups {
        for s in 0..d * d {
            let coset = sg.translated(PhasePoint::from_flat(d, s));
            if seen.insert(coset.flat_indices()) {
                out.push(coset);
            }
        }
    }
    out.sort_by_key(|c| c.flat_indices());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn weyl_examples() {
        assert!(weyl_operator(2, 0, 0).unwrap().approx_eq(&ComplexMatrix::identity(2), 0.0));

        let w11 = weyl_operator(2, 1, 1).unwrap();
        let expected = ComplexMatrix::from_row_major(
            2,
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert!(w11.approx_eq(&expected, 1e-15));

        let w = Complex64::from_polar(1.0, TAU / 3.0);
        let w10 = weyl_operator(3, 1, 0).unwrap();
        let diag = ComplexMatrix::from_fn(3, 3, |i, j| if i == j { w.powu(i as u32) } else { c(0.0, 0.0) });
        assert!(w10.approx_eq(&diag, 1e-15));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(weyl_operator(1, 0, 0), Err(Error::InvalidDimension(1))));
        assert!(matches!(weyl_operator(3, 3, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(bell_projector(3, 0, 5).is_err());
    }

    #[test]
    fn bell_00_for_qubits() {
        let p = bell_projector(2, 0, 0).unwrap();
        let h = 0.5;
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((p.get(i, j) - c(h, 0.0)).norm() < 1e-15);
        }
        assert!(p.get(1, 1).norm() < 1e-15);
    }

    #[test]
    fn bell_vector_matches_weyl_definition() {
        for d in 2..=4 {
            let omega = bell_vector(d, 0, 0).unwrap();
            for k in 0..d {
                for l in 0..d {
                    let op = weyl_operator(d, k, l).unwrap().kron(&ComplexMatrix::identity(d));
                    let v = op.apply(&omega);
                    let direct = bell_vector(d, k, l).unwrap();
                    for (a, b) in v.iter().zip(&direct) {
                        assert!((a - b).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn subgroup_counts() {
        let count = |d| enumerate_order_d_subgroups(d).unwrap();
        assert_eq!(count(2).len(), 3);
        assert_eq!(count(3).len(), 4);
        let four = count(4);
        assert_eq!(four.len(), 7);
        let sub: Vec<_> = four.iter().filter(|s| s.kind == SubgroupKind::Sublattice).collect();
        assert_eq!(sub.len(), 1);
        let pts: Vec<(usize, usize)> = sub[0].points.iter().map(|p| (p.k, p.l)).collect();
        assert_eq!(pts, vec![(0, 0), (0, 2), (2, 0), (2, 2)]);
        assert!(count(2).iter().chain(count(3).iter()).all(|s| s.kind == SubgroupKind::Line));
    }

    #[test]
    fn coset_counts() {
        assert_eq!(enumerate_cosets(2).unwrap().len(), 6);
        assert_eq!(enumerate_cosets(3).unwrap().len(), 12);
        assert_eq!(enumerate_cosets(4).unwrap().len(), 28);
    }

    #[test]
    fn cosets_are_translates() {
        for coset in enumerate_cosets(4).unwrap() {
            let base: Vec<PhasePoint> = coset.points.iter().map(|p| p.add(&coset.shift.neg())).collect();
            assert!(base.iter().any(|p| p.flat() == 0));
            for p in &base {
                for q in &base {
                    assert!(base.contains(&p.add(q)));
                }
            }
        }
    }
}
