//! Monte Carlo experiments on the magic simplex: relative volumes, class
//! shares, pairwise detector overlaps, scatter exports and per-state
//! concentration statistics.
//!
//! Every random draw comes from a stream derived from `(seed, tag, d, shard)`,
//! so results do not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_batch, ClassSummary, ClassificationRecord, ClassifyConfig, Label, Resources};
use crate::detectors::{Criterion, DetectorVerdict, Tolerances};
use crate::error::{check_dimension, Error, Result};
use crate::io;
use crate::rng;
use crate::state::{in_enclosure, sample_enclosure, sample_simplex, BellDiagonalState};
use crate::weyl::enumerate_cosets;

pub const SHARD: usize = 4096;
pub const MIN_VOLUME_SAMPLES: usize = 1000;

const VOLUME_TAG: u64 = 0x564f;
const CLASS_TAG: u64 = 0x434c;

/// A binomial proportion with its standard error `sqrt(p(1-p)/n)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Share {
    pub p: f64,
    pub stderr: f64,
    pub hits: usize,
    pub n: usize,
}

impl Share {
    pub fn new(hits: usize, n: usize) -> Self {
        if n == 0 {
            return Self { p: 0.0, stderr: 0.0, hits, n };
        }
        let p = hits as f64 / n as f64;
        Self { p, stderr: (p * (1.0 - p) / n as f64).sqrt(), hits, n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub d: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// Fraction of the simplex inside the enclosure polytope.
    pub share_enclosure: Share,
    /// Fraction of the simplex that is PPT.
    pub share_ppt: Share,
    /// PPT fraction among samples in the enclosure polytope.
    pub ppt_within_enclosure: Share,
    pub config: String,
    /// Not serialized, so equal inputs give byte-identical reports.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Default, Clone, Copy)]
struct VolumeCounts {
    enclosure: usize,
    ppt: usize,
    ppt_enclosure: usize,
}

fn is_ppt(s: &BellDiagonalState, tol: &Tolerances) -> Result<bool> {
    Ok(!DetectorVerdict::ppt(s, tol)?.fired)
}

/// Samples `n` uniform states of the simplex and counts enclosure membership
/// and PPT.
pub fn estimate_volumes(d: usize, n: usize, seed: u64) -> Result<VolumeReport> {
    check_dimension(d)?;
    if n < MIN_VOLUME_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_VOLUME_SAMPLES} samples, got {n}")));
    }
    let start = Instant::now();
    let tol = Tolerances::default();
    let shards = n.div_ceil(SHARD);
    let counts = (0..shards)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, &[VOLUME_TAG, d as u64, i as u64]);
            let len = SHARD.min(n - i * SHARD);
            let mut c = VolumeCounts::default();
            for _ in 0..len {
                let s = sample_simplex(d, &mut r)?;
                let enc = in_enclosure(&s);
                let ppt = is_ppt(&s, &tol)?;
                c.enclosure += enc as usize;
                c.ppt += ppt as usize;
                c.ppt_enclosure += (enc && ppt) as usize;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(VolumeCounts::default(), |a, b| VolumeCounts {
            enclosure: a.enclosure + b.enclosure,
            ppt: a.ppt + b.ppt,
            ppt_enclosure: a.ppt_enclosure + b.ppt_enclosure,
        });
    Ok(VolumeReport {
        d,
        n_samples: n,
        seed,
        share_enclosure: Share::new(counts.enclosure, n),
        share_ppt: Share::new(counts.ppt, n),
        ppt_within_enclosure: Share::new(counts.ppt_enclosure, counts.enclosure),
        config: io::fingerprint(&("volumes", d, n, seed, tol, SHARD)),
        wall_time: start.elapsed(),
    })
}

/// `n` uniform samples of the enclosure polytope, drawn shard by shard.
pub fn sample_enclosure_corpus(d: usize, n: usize, seed: u64) -> Result<Vec<BellDiagonalState>> {
    check_dimension(d)?;
    let shards = n.div_ceil(SHARD);
    let parts = (0..shards)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, &[CLASS_TAG, d as u64, i as u64]);
            (0..SHARD.min(n - i * SHARD)).map(|_| sample_enclosure(d, &mut r)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Classifies `n` uniform samples of the enclosure polytope.
pub fn class_share_experiment(
    n: usize,
    res: &Resources,
    cfg: &ClassifyConfig,
    seed: u64,
) -> Result<(Vec<ClassificationRecord>, ClassSummary)> {
    let states = sample_enclosure_corpus(res.d, n, seed)?;
    classify_batch(&states, None, res, cfg)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub a: Criterion,
    pub b: Criterion,
    pub only_a: usize,
    pub only_b: usize,
    pub joint: usize,
}

impl PairOverlap {
    /// Jointly detected over detected by either; zero when neither fires.
    pub fn joint_share(&self) -> f64 {
        let union = self.only_a + self.only_b + self.joint;
        if union == 0 {
            0.0
        } else {
            self.joint as f64 / union as f64
        }
    }
}

/// Purity `Σ c²` over the states a criterion detected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub criteria: Vec<Criterion>,
    /// BOUND records considered.
    pub bound: usize,
    pub pairs: Vec<PairOverlap>,
    pub purity: BTreeMap<Criterion, Option<PurityStats>>,
}

fn fired_on_state(r: &ClassificationRecord, c: Criterion) -> bool {
    r.evidence.iter().any(|e| e.criterion == c && e.fired && e.orbit_element.is_none())
}

/// Pairwise exclusive and joint detections among the entanglement criteria on
/// BOUND records. Only evidence computed on the state itself counts.
pub fn detector_overlap(records: &[ClassificationRecord]) -> OverlapMatrix {
    let criteria = vec![Criterion::E2, Criterion::E3, Criterion::E4, Criterion::E5];
    let bound: Vec<&ClassificationRecord> = records.iter().filter(|r| r.label == Label::Bound).collect();
    let flags: Vec<Vec<bool>> =
        bound.iter().map(|r| criteria.iter().map(|&c| fired_on_state(r, c)).collect()).collect();
    let mut pairs = Vec::new();
    for i in 0..criteria.len() {
        for j in i + 1..criteria.len() {
            let mut p = PairOverlap { a: criteria[i], b: criteria[j], only_a: 0, only_b: 0, joint: 0 };
            for f in &flags {
                match (f[i], f[j]) {
                    (true, true) => p.joint += 1,
                    (true, false) => p.only_a += 1,
                    (false, true) => p.only_b += 1,
                    _ => {}
                }
            }
            pairs.push(p);
        }
    }
    let purity = criteria
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let vals: Vec<f64> = bound
                .iter()
                .zip(&flags)
                .filter(|(_, f)| f[i])
                .map(|(r, _)| r.c.iter().map(|x| x * x).sum())
                .collect();
            let stats = (!vals.is_empty()).then(|| PurityStats {
                count: vals.len(),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
            (c, stats)
        })
        .collect();
    OverlapMatrix { criteria, bound: bound.len(), pairs, purity }
}

fn check_indices(d: usize, idx: &[usize; 4]) -> Result<()> {
    for (i, &x) in idx.iter().enumerate() {
        if x >= d * d {
            return Err(Error::InvalidArgument(format!("coordinate index {x} out of range for d={d}")));
        }
        if idx[..i].contains(&x) {
            return Err(Error::InvalidArgument(format!("coordinate index {x} repeated")));
        }
    }
    Ok(())
}

fn write_scatter<'a>(
    d: usize,
    rows: impl Iterator<Item = (&'a [f64], &'a str)>,
    idx: &[usize; 4],
    path: &Path,
) -> Result<()> {
    check_indices(d, idx)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "z", "color", "label"])?;
    for (c, label) in rows {
        if c.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, actual: c.len() });
        }
        let mut rec: Vec<String> = idx.iter().map(|&i| c[i].to_string()).collect();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    io::write_atomic(path, &bytes)
}

/// CSV with four selected coordinates (three axes and a color) plus the label.
pub fn export_scatter(d: usize, records: &[ClassificationRecord], idx: &[usize; 4], path: &Path) -> Result<()> {
    write_scatter(d, records.iter().map(|r| (r.c.as_slice(), r.label.as_str())), idx, path)
}

/// Same layout as [`export_scatter`] for unclassified states; the label
/// column is empty.
pub fn export_scatter_states(d: usize, states: &[BellDiagonalState], idx: &[usize; 4], path: &Path) -> Result<()> {
    write_scatter(d, states.iter().map(|s| (s.coords(), "")), idx, path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub id: String,
    /// `max |c - 1/d²|`.
    pub linf_from_uniform: f64,
    /// Largest total weight on a single coset of an order-`d` subgroup.
    pub concentration: f64,
    pub label: Label,
}

pub fn conjecture_probe(records: &[ClassificationRecord]) -> Result<Vec<ProbeRow>> {
    let mut cosets: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    records
        .iter()
        .map(|r| {
            let d = r.d;
            if !cosets.contains_key(&d) {
                let cs = enumerate_cosets(d)?.iter().map(|c| c.flat_indices()).collect();
                cosets.insert(d, cs);
            }
            let u = 1.0 / (d * d) as f64;
            let linf = r.c.iter().map(|x| (x - u).abs()).fold(0.0, f64::max);
            let concentration =
                cosets[&d].iter().map(|idx| idx.iter().map(|&i| r.c[i]).sum::<f64>()).fold(0.0, f64::max);
            Ok(ProbeRow { id: r.id.clone(), linf_from_uniform: linf, concentration, label: r.label })
        })
        .collect()
}

pub fn write_probe(path: &Path, rows: &[ProbeRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "linf_from_uniform", "concentration", "label"])?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.linf_from_uniform.to_string(),
            r.concentration.to_string(),
            r.label.as_str().to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    io::write_atomic(path, &bytes)
}
