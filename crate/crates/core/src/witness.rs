//! Bell-diagonal entanglement witnesses `W = Σ κ_{k,l} P_{k,l}` with numerically
//! certified separable bounds `L ≤ c·κ ≤ U`.
//!
//! Bounds come from multi-start optimization over product states, so they are
//! inner estimates of the true extrema. Three things guard against false
//! detections: the widening margin, the requirement that the extremum be found
//! by at least `min_hits` independent starts, and the kernel vertices, whose
//! values are folded into the bounds directly.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};
use crate::io;
use crate::product::{maximize_product, minimize_product, ProductConfig};
use crate::rng::{self, SimRng};
use crate::state::{kernel_vertices, BellDiagonalState};

/// Stream tag for witness generation.
const WITNESS_STREAM: u64 = 0x5749;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub product: ProductConfig,
    /// Safety margin subtracted from `L` and added to `U`.
    pub margin: f64,
    /// Starts that must reproduce an extremum before it counts as certified.
    pub min_hits: usize,
    /// Draws `random_witness` makes before giving up.
    pub max_attempts: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self { product: ProductConfig::default(), margin: 1e-6, min_hits: 2, max_attempts: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_hits: usize,
    pub upper_hits: usize,
    pub restarts: usize,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessMeta {
    pub restarts: usize,
    pub margin: f64,
    pub lower_hits: usize,
    pub upper_hits: usize,
    pub seed: u64,
    pub index: u64,
    pub attempt: u64,
    pub sampling: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementWitness {
    pub id: String,
    pub d: usize,
    pub kappa: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub meta: WitnessMeta,
}

/// Stable id from `d` and `κ` rounded to 12 decimals.
pub fn witness_id(d: usize, kappa: &[f64]) -> String {
    let rounded: Vec<String> = kappa.iter().map(|x| format!("{:.12}", x + 0.0)).collect();
    io::fingerprint(&(d, rounded))
}

impl EntanglementWitness {
    pub fn value(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.kappa).map(|(a, b)| a * b).sum()
    }

    pub fn detects_coords(&self, c: &[f64]) -> bool {
        let v = self.value(c);
        v < self.lower || v > self.upper
    }

    pub fn detects(&self, s: &BellDiagonalState) -> bool {
        s.d() == self.d && self.detects_coords(s.coords())
    }
}

/// `tr[ρ W] = c·κ`.
pub fn witness_value(w: &EntanglementWitness, s: &BellDiagonalState) -> Result<f64> {
    if w.d != s.d() {
        return Err(Error::DimensionMismatch { expected: w.d, actual: s.d() });
    }
    Ok(w.value(s.coords()))
}

fn validate_kappa(d: usize, kappa: &[f64]) -> Result<()> {
    check_dimension(d)?;
    if kappa.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, actual: kappa.len() });
    }
    if kappa.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
        return Err(Error::InvalidArgument("witness coefficients must lie in [-1, 1]".into()));
    }
    Ok(())
}

/// Separable bounds of `Σ κ_{k,l} P_{k,l}`, widened by `cfg.margin`.
pub fn certify_bounds<R: Rng + ?Sized>(
    kappa: &[f64],
    d: usize,
    cfg: &WitnessConfig,
    rng: &mut R,
) -> Result<WitnessBounds> {
    validate_kappa(d, kappa)?;
    let lo = minimize_product(d, kappa, &cfg.product, rng)?;
    let hi = maximize_product(d, kappa, &cfg.product, rng)?;
    let (mut lower, mut upper) = (lo.value, hi.value);
    for v in kernel_vertices(d)? {
        let x: f64 = v.state.coords().iter().zip(kappa).map(|(a, b)| a * b).sum();
        lower = lower.min(x);
        upper = upper.max(x);
    }
    let certified = lo.hits >= cfg.min_hits && hi.hits >= cfg.min_hits;
    Ok(WitnessBounds {
        lower: lower - cfg.margin,
        upper: upper + cfg.margin,
        lower_hits: lo.hits,
        upper_hits: hi.hits,
        restarts: lo.restarts,
        certified,
    })
}

/// Certified witness for explicit coefficients.
pub fn witness_from_kappa<R: Rng + ?Sized>(
    d: usize,
    kappa: Vec<f64>,
    cfg: &WitnessConfig,
    rng: &mut R,
) -> Result<EntanglementWitness> {
    let b = certify_bounds(&kappa, d, cfg, rng)?;
    if !b.certified {
        return Err(Error::Certification(format!(
            "extremum reproduced by {}/{} starts (need {})",
            b.lower_hits.min(b.upper_hits),
            b.restarts,
            cfg.min_hits
        )));
    }
    Ok(EntanglementWitness {
        id: witness_id(d, &kappa),
        d,
        kappa,
        lower: b.lower,
        upper: b.upper,
        meta: WitnessMeta {
            restarts: b.restarts,
            margin: cfg.margin,
            lower_hits: b.lower_hits,
            upper_hits: b.upper_hits,
            seed: 0,
            index: 0,
            attempt: 0,
            sampling: "explicit".into(),
        },
    })
}

/// Draws `κ` uniformly from `[-1, 1]^{d²}` and certifies it; draws whose
/// bounds fail certification are discarded.
pub fn random_witness<R: Rng + ?Sized>(d: usize, rng: &mut R, cfg: &WitnessConfig) -> Result<EntanglementWitness> {
    check_dimension(d)?;
    for attempt in 0..cfg.max_attempts.max(1) {
        let kappa: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        match witness_from_kappa(d, kappa, cfg, rng) {
            Ok(mut w) => {
                w.meta.attempt = attempt as u64;
                w.meta.sampling = "uniform[-1,1]".into();
                return Ok(w);
            }
            Err(Error::Certification(msg)) => log::debug!("discarding witness draw: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Certification(format!("no certified witness after {} draws", cfg.max_attempts)))
}

fn witness_rng(seed: u64, d: usize, index: u64) -> SimRng {
    rng::stream(seed, &[WITNESS_STREAM, d as u64, index])
}

/// A bank of witnesses for one dimension, kept sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WitnessBank {
    d: usize,
    witnesses: Vec<EntanglementWitness>,
}

impl WitnessBank {
    pub fn new(d: usize, mut witnesses: Vec<EntanglementWitness>) -> Result<Self> {
        check_dimension(d)?;
        if let Some(w) = witnesses.iter().find(|w| w.d != d || w.kappa.len() != d * d) {
            return Err(Error::DimensionMismatch { expected: d, actual: w.d });
        }
        witnesses.sort_by(|a, b| a.id.cmp(&b.id));
        witnesses.dedup_by(|a, b| a.id == b.id);
        Ok(Self { d, witnesses })
    }

    pub fn empty(d: usize) -> Self {
        Self { d, witnesses: Vec::new() }
    }

    /// Generates `count` certified witnesses. Witness `i` draws from its own
    /// stream derived from `(seed, d, i)`, so the bank does not depend on the
    /// worker count.
    pub fn forge(d: usize, count: usize, seed: u64, cfg: &WitnessConfig) -> Result<Self> {
        check_dimension(d)?;
        let ws = (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let mut r = witness_rng(seed, d, i);
                let mut w = random_witness(d, &mut r, cfg)?;
                w.meta.seed = seed;
                w.meta.index = i;
                Ok(w)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, ws)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn witnesses(&self) -> &[EntanglementWitness] {
        &self.witnesses
    }

    /// First witness in id order that detects coordinates `c`.
    pub fn check_coords(&self, c: &[f64]) -> Option<&EntanglementWitness> {
        self.witnesses.iter().find(|w| w.detects_coords(c))
    }

    pub fn check(&self, s: &BellDiagonalState) -> Option<&EntanglementWitness> {
        if s.d() != self.d {
            return None;
        }
        self.check_coords(s.coords())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_jsonl(path, &self.witnesses)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ws: Vec<EntanglementWitness> = io::read_jsonl(path)?;
        let d = match ws.first() {
            Some(w) => w.d,
            None => {
                return Err(Error::Resource { path: path.to_path_buf(), message: "empty witness bank".into() })
            }
        };
        if ws.iter().any(|w| w.d != d) {
            return Err(Error::Resource { path: path.to_path_buf(), message: "witnesses of mixed dimension".into() });
        }
        for w in &ws {
            validate_kappa(d, &w.kappa).map_err(|e| Error::Resource {
                path: path.to_path_buf(),
                message: format!("witness {}: {e}", w.id),
            })?;
        }
        Self::new(d, ws)
    }
}

/// Id of the first witness (in id order) whose interval excludes `c·κ`.
pub fn bank_check(bank: &[EntanglementWitness], s: &BellDiagonalState) -> Option<String> {
    bank.iter()
        .filter(|w| w.detects(s))
        .min_by(|a, b| a.id.cmp(&b.id))
        .map(|w| w.id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_cfg() -> WitnessConfig {
        WitnessConfig { product: ProductConfig { restarts: 24, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn value_examples() {
        let mut r = rng::stream(31, &[]);
        let cfg = fast_cfg();
        let ones = witness_from_kappa(3, vec![1.0; 9], &cfg, &mut r).unwrap();
        let p = BellDiagonalState::indicator(3, 0, 0).unwrap();
        assert!((witness_value(&ones, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((ones.lower - (1.0 - 1e-6)).abs() < 1e-9 && (ones.upper - (1.0 + 1e-6)).abs() < 1e-9);

        let mut k = vec![0.0; 9];
        k[0] = 1.0;
        let w = witness_from_kappa(3, k, &cfg, &mut r).unwrap();
        assert!((witness_value(&w, &p).unwrap() - 1.0).abs() < 1e-15);
        let u = BellDiagonalState::uniform(3).unwrap();
        assert!((witness_value(&w, &u).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!((w.lower + 1e-6).abs() < 1e-8);
        assert!((w.upper - 1.0 / 3.0 - 1e-6).abs() < 1e-8);

        assert_eq!(bank_check(std::slice::from_ref(&w), &p), Some(w.id.clone()));
        assert_eq!(bank_check(std::slice::from_ref(&w), &u), None);
        assert_eq!(bank_check(&[], &p), None);
        assert!(witness_value(&w, &BellDiagonalState::uniform(2).unwrap()).is_err());
    }

    #[test]
    fn rejects_out_of_range_kappa() {
        let mut r = rng::stream(32, &[]);
        assert!(certify_bounds(&[2.0, 0.0, 0.0, 0.0], 2, &fast_cfg(), &mut r).is_err());
        assert!(certify_bounds(&[0.0; 3], 2, &fast_cfg(), &mut r).is_err());
    }

    #[test]
    fn ids_are_stable_under_tiny_perturbation() {
        let k = vec![0.25, -0.5, 0.125, 1.0];
        let mut k2 = k.clone();
        k2[0] += 1e-15;
        assert_eq!(witness_id(2, &k), witness_id(2, &k2));
        assert_ne!(witness_id(2, &k), witness_id(3, &k));
        assert_eq!(witness_id(2, &k).len(), 16);
    }

    #[test]
    fn forged_bank_is_reproducible_and_sorted() {
        let cfg = fast_cfg();
        let a = WitnessBank::forge(3, 6, 5, &cfg).unwrap();
        let b = WitnessBank::forge(3, 6, 5, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(a.witnesses().windows(2).all(|w| w[0].id < w[1].id));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.jsonl");
        a.save(&path).unwrap();
        assert_eq!(WitnessBank::load(&path).unwrap(), a);
    }
}
