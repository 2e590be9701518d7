//! Entanglement-class-preserving symmetries of the magic simplex, stored as
//! permutations of the flattened Bell indices.

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};
use crate::io;
use crate::state::BellDiagonalState;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryPermutation {
    d: usize,
    perm: Vec<usize>,
    /// generator word, for diagnostics only
    pub label: String,
}

impl SymmetryPermutation {
    pub fn new(d: usize, perm: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        check_dimension(d)?;
        if perm.len() != d * d {
            return Err(Error::InvalidPermutation(format!("length {} for d = {d}", perm.len())));
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection")));
            }
        }
        Ok(Self { d, perm, label: label.into() })
    }

    pub fn identity(d: usize) -> Self {
        Self { d, perm: (0..d * d).collect(), label: "e".into() }
    }

    /// Permutation induced by `(k, l) -> f(k, l)` with all arithmetic mod `d`.
    fn from_map(d: usize, label: &str, f: impl Fn(i64, i64) -> (i64, i64)) -> Self {
        let m = d as i64;
        let perm = (0..d * d)
            .map(|i| {
                let (k, l) = f((i / d) as i64, (i % d) as i64);
                (k.rem_euclid(m) * m + l.rem_euclid(m)) as usize
            })
            .collect();
        Self { d, perm, label: label.into() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Image of a flat index.
    #[inline]
    pub fn map_index(&self, i: usize) -> usize {
        self.perm[i]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        Self {
            d: self.d,
            perm: other.perm.iter().map(|&i| self.perm[i]).collect(),
            label: format!("{}·{}", self.label, other.label),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { d: self.d, perm: inv, label: format!("({})⁻¹", self.label) }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Permutes coordinates: `out[perm[i]] = c[i]`.
    pub fn permute(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; c.len()];
        for (i, &x) in c.iter().enumerate() {
            out[self.perm[i]] = x;
        }
        out
    }

    pub fn apply(&self, s: &BellDiagonalState) -> Result<BellDiagonalState> {
        if s.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: s.d() });
        }
        BellDiagonalState::new(self.d, self.permute(s.coords()))
    }
}

/// Momentum inversion `m`, quarter rotation `r`, vertical shear `v` and the
/// translations `t_{p,q}` (excluding the identity translation).
pub fn generators(d: usize) -> Result<Vec<SymmetryPermutation>> {
    check_dimension(d)?;
    let mut gens = vec![
        SymmetryPermutation::from_map(d, "m", |k, l| (-k, l)),
        SymmetryPermutation::from_map(d, "r", |k, l| (-l, k)),
        SymmetryPermutation::from_map(d, "v", |k, l| (k + l, l)),
    ];
    for p in 0..d as i64 {
        for q in 0..d as i64 {
            if p == 0 && q == 0 {
                continue;
            }
            gens.push(SymmetryPermutation::from_map(d, &format!("t{p},{q}"), move |k, l| {
                (k + p, l + q)
            }));
        }
    }
    Ok(gens)
}

/// The finite group generated by [`generators`], identity first, in
/// breadth-first discovery order.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    d: usize,
    elements: Vec<SymmetryPermutation>,
}

#[derive(Serialize, Deserialize)]
struct GroupFile {
    d: usize,
    perms: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    pub fn generate(d: usize) -> Result<Self> {
        let gens = generators(d)?;
        let id = SymmetryPermutation::identity(d);
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        seen.insert(id.perm.clone());
        let mut elements = vec![id];
        let mut queue = VecDeque::from([0usize]);
        while let Some(idx) = queue.pop_front() {
            for g in &gens {
                let next = g.compose(&elements[idx]);
                if seen.insert(next.perm.clone()) {
                    let mut next = next;
                    // keep labels short: word in generator names, newest first
                    next.label = if elements[idx].is_identity() {
                        g.label.clone()
                    } else {
                        format!("{}·{}", g.label, elements[idx].label)
                    };
                    queue.push_back(elements.len());
                    elements.push(next);
                }
            }
        }
        Ok(Self { d, elements })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[SymmetryPermutation] {
        &self.elements
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = GroupFile {
            d: self.d,
            perms: self.elements.iter().map(|e| e.perm.clone()).collect(),
        };
        io::write_atomic(path, serde_json::to_string(&file)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: GroupFile = io::read_json(path)?;
        let elements = file
            .perms
            .into_iter()
            .enumerate()
            .map(|(i, p)| SymmetryPermutation::new(file.d, p, format!("g{i}")))
            .collect::<Result<Vec<_>>>()?;
        if elements.first().map_or(true, |e| !e.is_identity()) {
            return Err(Error::Resource {
                path: path.to_path_buf(),
                message: "group cache must list the identity first".into(),
            });
        }
        Ok(Self { d: file.d, elements })
    }

    /// Loads the cache for `d` if present and matching, otherwise generates and
    /// writes it.
    pub fn load_or_generate(d: usize, path: &Path) -> Result<Self> {
        if path.exists() {
            if let Ok(g) = Self::load(path) {
                if g.d == d {
                    return Ok(g);
                }
            }
        }
        let g = Self::generate(d)?;
        g.save(path)?;
        Ok(g)
    }

    /// Distinct images of `s` under the group (coordinate-wise equality within
    /// 1e-12), in group order.
    pub fn orbit(&self, s: &BellDiagonalState) -> Result<Vec<BellDiagonalState>> {
        Ok(self.orbit_indexed(s)?.into_iter().map(|(_, st)| st).collect())
    }

    /// Like [`orbit`](Self::orbit) but also reports the index of the first group
    /// element producing each image.
    pub fn orbit_indexed(&self, s: &BellDiagonalState) -> Result<Vec<(usize, BellDiagonalState)>> {
        if s.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: s.d() });
        }
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut out = Vec::new();
        for (i, g) in self.elements.iter().enumerate() {
            let c = g.permute(s.coords());
            if seen.insert(coordinate_key(&c)) {
                out.push((i, BellDiagonalState::new(self.d, c)?));
            }
        }
        Ok(out)
    }

    /// Orbit representative with the lexicographically largest coordinate
    /// vector, together with the index of the element that produces it.
    pub fn canonical_image(&self, c: &[f64]) -> (usize, Vec<f64>) {
        let mut best_idx = 0;
        let mut best = c.to_vec();
        let mut buf = vec![0.0; c.len()];
        for (i, g) in self.elements.iter().enumerate().skip(1) {
            for (j, &x) in c.iter().enumerate() {
                buf[g.perm[j]] = x;
            }
            if lex_greater(&buf, &best) {
                best.copy_from_slice(&buf);
                best_idx = i;
            }
        }
        (best_idx, best)
    }

    /// Number of group elements fixing `s` exactly.
    pub fn stabilizer_size(&self, s: &BellDiagonalState) -> usize {
        let key = coordinate_key(s.coords());
        self.elements
            .iter()
            .filter(|g| coordinate_key(&g.permute(s.coords())) == key)
            .count()
    }

    pub fn index_of(&self, perm: &[usize]) -> Option<usize> {
        self.elements.iter().position(|e| e.perm == perm)
    }

    /// Map from permutation to position; used by exhaustive group-axiom checks.
    pub fn index_map(&self) -> HashMap<Vec<usize>, usize> {
        self.elements.iter().enumerate().map(|(i, e)| (e.perm.clone(), i)).collect()
    }
}

fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

/// Coordinates rounded to 12 decimals, used for deduplication.
pub fn coordinate_key(c: &[f64]) -> Vec<i64> {
    c.iter().map(|x| (x * 1e12).round() as i64).collect()
}
