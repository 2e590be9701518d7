//! Classification of Bell-diagonal states into FREE, SEP, BOUND and
//! PPT_UNKNOWN, with the evidence that decided each label.
//!
//! E1 runs first and settles every NPT state. For `d = 2` PPT already implies
//! separability. Otherwise the closed-form criteria, hull membership and the
//! witness bank are consulted on the state. If none is decisive, the same
//! criteria are tried on the images of the state under the symmetry group,
//! which preserve the entanglement class.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{default_mub_shift, standard_mubs, Criterion, DetectorVerdict, MubSet, Tolerances};
use crate::error::{Error, Result};
use crate::hull::{hull_decomposition_coords, HullConfig, SeparableVertexSet};
use crate::io;
use crate::state::BellDiagonalState;
use crate::symmetry::{coordinate_key, SymmetryGroup};
use crate::witness::WitnessBank;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Free,
    Sep,
    Bound,
    PptUnknown,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Free, Label::Sep, Label::Bound, Label::PptUnknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Free => "FREE",
            Label::Sep => "SEP",
            Label::Bound => "BOUND",
            Label::PptUnknown => "PPT_UNKNOWN",
        }
    }
}

/// One criterion evaluation. `orbit_element` is the index of the group element
/// applied to the state first (`None` for the state itself).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub criterion: Criterion,
    pub fired: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit_element: Option<usize>,
}

impl Evidence {
    fn from_verdict(v: DetectorVerdict, orbit_element: Option<usize>) -> Self {
        Self {
            criterion: v.criterion,
            fired: v.fired,
            value: Some(v.value),
            threshold: Some(v.threshold),
            witness_id: None,
            orbit_element,
        }
    }

    pub fn entangled(&self) -> bool {
        self.fired && self.criterion.detects_entanglement()
    }

    pub fn separable(&self) -> bool {
        self.fired && !self.criterion.detects_entanglement()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub id: String,
    pub d: usize,
    pub c: Vec<f64>,
    pub label: Label,
    pub evidence: Vec<Evidence>,
    pub orbit_used: bool,
    #[serde(default)]
    pub conflict: bool,
    pub config: String,
}

impl ClassificationRecord {
    pub fn fired(&self, criterion: Criterion) -> bool {
        self.evidence.iter().any(|e| e.criterion == criterion && e.fired)
    }

    pub fn state(&self) -> Result<BellDiagonalState> {
        BellDiagonalState::new(self.d, self.c.clone())
    }
}

/// Everything the classifier reads besides the state. Immutable during a run.
#[derive(Clone, Debug)]
pub struct Resources {
    pub d: usize,
    pub group: SymmetryGroup,
    pub mubs: Option<MubSet>,
    pub vertices: Option<SeparableVertexSet>,
    pub bank: Option<WitnessBank>,
}

impl Resources {
    pub fn new(
        group: SymmetryGroup,
        mubs: Option<MubSet>,
        vertices: Option<SeparableVertexSet>,
        bank: Option<WitnessBank>,
    ) -> Result<Self> {
        let d = group.d();
        let check = |actual: usize| {
            if actual == d {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: d, actual })
            }
        };
        if let Some(m) = &mubs {
            check(m.d())?;
        }
        if let Some(v) = &vertices {
            check(v.d())?;
        }
        if let Some(b) = &bank {
            check(b.d())?;
        }
        Ok(Self { d, group, mubs, vertices, bank })
    }

    /// Group and built-in MUBs only (no hull, no witnesses).
    pub fn minimal(d: usize) -> Result<Self> {
        let mubs = if matches!(d, 3 | 4) { Some(standard_mubs(d)?) } else { None };
        Self::new(SymmetryGroup::generate(d)?, mubs, None, None)
    }

    fn summary(&self) -> ResourceSummary {
        ResourceSummary {
            d: self.d,
            group_order: self.group.len(),
            mubs: self.mubs.is_some(),
            vertices: self.vertices.as_ref().map_or(0, |v| v.len()),
            vertex_hash: self.vertices.as_ref().map(|v| {
                let keys: Vec<Vec<i64>> = v.vertices().iter().map(|x| coordinate_key(x.state.coords())).collect();
                io::fingerprint(&keys)
            }),
            witnesses: self.bank.as_ref().map_or(0, |b| b.len()),
            witness_hash: self.bank.as_ref().map(|b| {
                let ids: Vec<&str> = b.witnesses().iter().map(|w| w.id.as_str()).collect();
                io::fingerprint(&ids)
            }),
        }
    }
}

#[derive(Serialize)]
struct ResourceSummary {
    d: usize,
    group_order: usize,
    mubs: bool,
    vertices: usize,
    vertex_hash: Option<String>,
    witnesses: usize,
    witness_hash: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub use_orbit: bool,
    /// Evaluate every criterion on the state even after a decisive verdict,
    /// so per-criterion detection shares can be reported.
    pub full_evidence: bool,
    pub tolerances: Tolerances,
    /// Shift for the MUB criterion; defaults per dimension.
    pub mub_shift: Option<usize>,
    pub hull: HullConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            use_orbit: true,
            full_evidence: true,
            tolerances: Tolerances::default(),
            mub_shift: None,
            hull: HullConfig::default(),
        }
    }
}

/// Stable hash of the configuration together with the identity of the
/// resources it runs against.
pub fn config_fingerprint(res: &Resources, cfg: &ClassifyConfig) -> String {
    io::fingerprint(&(cfg, res.summary()))
}

struct Pipeline<'a> {
    res: &'a Resources,
    cfg: &'a ClassifyConfig,
    mub_shift: Option<usize>,
}

impl Pipeline<'_> {
    /// S2, E2, E3 and (if available) E4 on coordinates `c`.
    fn cheap(&self, s: &BellDiagonalState, orbit: Option<usize>) -> Result<Vec<Evidence>> {
        let tol = &self.cfg.tolerances;
        let mut out = vec![
            Evidence::from_verdict(DetectorVerdict::weyl(s, tol), orbit),
            Evidence::from_verdict(DetectorVerdict::realignment(s, tol), orbit),
            Evidence::from_verdict(DetectorVerdict::concurrence(s, tol), orbit),
        ];
        if let (Some(m), Some(shift)) = (&self.res.mubs, self.mub_shift) {
            out.push(Evidence::from_verdict(DetectorVerdict::mub(s, m, shift, tol)?, orbit));
        }
        Ok(out)
    }

    fn hull(&self, c: &[f64], orbit: Option<usize>) -> Result<Option<Evidence>> {
        let Some(vs) = &self.res.vertices else { return Ok(None) };
        let r = hull_decomposition_coords(vs, c, &self.cfg.hull)?;
        Ok(Some(Evidence {
            criterion: Criterion::S1,
            fired: r.member,
            value: Some(r.distance),
            threshold: Some(self.cfg.hull.dist_tol),
            witness_id: None,
            orbit_element: orbit,
        }))
    }

    /// Hull membership of the state, trying its canonical orbit
    /// representative first.
    fn hull_state(&self, s: &BellDiagonalState) -> Result<Option<Evidence>> {
        if self.res.vertices.is_none() {
            return Ok(None);
        }
        let (g, canon) = self.res.group.canonical_image(s.coords());
        if g != 0 {
            if let Some(e) = self.hull(&canon, Some(g))? {
                if e.fired {
                    return Ok(Some(e));
                }
            }
        }
        self.hull(s.coords(), None)
    }

    fn witness(&self, c: &[f64], orbit: Option<usize>) -> Option<Evidence> {
        let bank = self.res.bank.as_ref()?;
        let hit = bank.check_coords(c);
        Some(Evidence {
            criterion: Criterion::E5,
            fired: hit.is_some(),
            value: hit.map(|w| w.value(c)),
            threshold: None,
            witness_id: hit.map(|w| w.id.clone()),
            orbit_element: orbit,
        })
    }
}

fn decide(evidence: &[Evidence]) -> (Option<Label>, bool) {
    let sep = evidence.iter().any(Evidence::separable);
    let ent = evidence.iter().any(Evidence::entangled);
    match (sep, ent) {
        (true, true) => (Some(Label::PptUnknown), true),
        (true, false) => (Some(Label::Sep), false),
        (false, true) => (Some(Label::Bound), false),
        (false, false) => (None, false),
    }
}

fn classify_with(
    s: &BellDiagonalState,
    id: String,
    res: &Resources,
    cfg: &ClassifyConfig,
    fingerprint: &str,
) -> Result<ClassificationRecord> {
    if s.d() != res.d {
        return Err(Error::DimensionMismatch { expected: res.d, actual: s.d() });
    }
    let d = s.d();
    let mut rec = ClassificationRecord {
        id,
        d,
        c: s.coords().to_vec(),
        label: Label::PptUnknown,
        evidence: Vec::new(),
        orbit_used: false,
        conflict: false,
        config: fingerprint.to_string(),
    };
    let e1 = DetectorVerdict::ppt(s, &cfg.tolerances)?;
    rec.evidence.push(Evidence::from_verdict(e1, None));
    if e1.fired {
        rec.label = Label::Free;
        return Ok(rec);
    }
    if d == 2 {
        rec.label = Label::Sep;
        return Ok(rec);
    }
    let p = Pipeline {
        res,
        cfg,
        mub_shift: cfg.mub_shift.or_else(|| default_mub_shift(d).ok()).filter(|&x| x < d),
    };

    let mut found = p.cheap(s, None)?;
    if cfg.full_evidence || decide(&found).0.is_none() {
        found.extend(p.hull_state(s)?);
    }
    if cfg.full_evidence || decide(&found).0.is_none() {
        found.extend(p.witness(s.coords(), None));
    }
    rec.evidence.extend(found);
    let (mut label, mut conflict) = decide(&rec.evidence);

    if label.is_none() && cfg.use_orbit {
        rec.orbit_used = true;
        let orbit = res.group.orbit_indexed(s)?;
        'cheap: for (g, img) in orbit.iter().skip(1) {
            let mut ev = p.cheap(img, Some(*g))?;
            if decide(&ev).0.is_none() {
                ev.extend(p.hull(img.coords(), Some(*g))?);
            }
            let decisive: Vec<Evidence> = ev.into_iter().filter(|e| e.fired).collect();
            if !decisive.is_empty() {
                rec.evidence.extend(decisive);
                break 'cheap;
            }
        }
        (label, conflict) = decide(&rec.evidence);
        if label.is_none() {
            for (g, img) in orbit.iter().skip(1) {
                if let Some(e) = p.witness(img.coords(), Some(*g)) {
                    if e.fired {
                        rec.evidence.push(e);
                        break;
                    }
                }
            }
            (label, conflict) = decide(&rec.evidence);
        }
    }
    rec.label = label.unwrap_or(Label::PptUnknown);
    rec.conflict = conflict;
    if conflict {
        log::warn!("state {}: separability and entanglement criteria both fired", rec.id);
    }
    Ok(rec)
}

pub fn classify(s: &BellDiagonalState, res: &Resources, cfg: &ClassifyConfig) -> Result<ClassificationRecord> {
    let fp = config_fingerprint(res, cfg);
    classify_with(s, io::fingerprint(&s.coords()), res, cfg, &fp)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub d: usize,
    pub n: usize,
    pub counts: BTreeMap<Label, usize>,
    pub ppt: usize,
    /// Shares among PPT states.
    pub ppt_shares: BTreeMap<Label, f64>,
    /// FREE, SEP and BOUND over all states.
    pub success_share: f64,
    /// Share of BOUND records on which each entanglement criterion fired.
    pub bound_detection: BTreeMap<Criterion, f64>,
    /// Share of SEP records on which each separability criterion fired.
    pub sep_detection: BTreeMap<Criterion, f64>,
    pub conflicts: usize,
    pub orbit_used: usize,
    pub config: String,
}

fn share(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn summarize(d: usize, records: &[ClassificationRecord], fingerprint: &str) -> ClassSummary {
    let mut counts: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    for r in records {
        *counts.entry(r.label).or_default() += 1;
    }
    let n = records.len();
    let ppt = n - counts[&Label::Free];
    let ppt_shares = [Label::Sep, Label::Bound, Label::PptUnknown]
        .iter()
        .map(|&l| (l, share(counts[&l], ppt)))
        .collect();
    let per = |label: Label, crits: &[Criterion]| -> BTreeMap<Criterion, f64> {
        let members: Vec<&ClassificationRecord> = records.iter().filter(|r| r.label == label).collect();
        crits
            .iter()
            .map(|&c| (c, share(members.iter().filter(|r| r.fired(c)).count(), members.len())))
            .collect()
    };
    ClassSummary {
        d,
        n,
        ppt,
        ppt_shares,
        success_share: share(n - counts[&Label::PptUnknown], n),
        bound_detection: per(Label::Bound, &[Criterion::E2, Criterion::E3, Criterion::E4, Criterion::E5]),
        sep_detection: per(Label::Sep, &[Criterion::S1, Criterion::S2]),
        conflicts: records.iter().filter(|r| r.conflict).count(),
        orbit_used: records.iter().filter(|r| r.orbit_used).count(),
        counts,
        config: fingerprint.to_string(),
    }
}

/// Classifies `states` in parallel; the output order matches the input.
/// Record ids default to the position in the batch.
pub fn classify_batch(
    states: &[BellDiagonalState],
    ids: Option<&[String]>,
    res: &Resources,
    cfg: &ClassifyConfig,
) -> Result<(Vec<ClassificationRecord>, ClassSummary)> {
    if let Some(s) = states.iter().find(|s| s.d() != res.d) {
        return Err(Error::DimensionMismatch { expected: res.d, actual: s.d() });
    }
    if let Some(ids) = ids {
        if ids.len() != states.len() {
            return Err(Error::InvalidArgument("one id per state required".into()));
        }
    }
    let fp = config_fingerprint(res, cfg);
    let records = states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let id = ids.map_or_else(|| i.to_string(), |ids| ids[i].clone());
            classify_with(s, id, res, cfg, &fp)
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(res.d, &records, &fp);
    if summary.conflicts > 0 {
        log::warn!("{} records with conflicting criteria", summary.conflicts);
    }
    Ok((records, summary))
}

pub fn write_records(path: &Path, records: &[ClassificationRecord]) -> Result<()> {
    io::write_jsonl(path, records)
}

pub fn read_records(path: &Path) -> Result<Vec<ClassificationRecord>> {
    io::read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::state::sample_enclosure;

    #[test]
    fn examples() {
        let res3 = Resources::minimal(3).unwrap();
        let cfg = ClassifyConfig::default();
        let p = BellDiagonalState::indicator(3, 0, 0).unwrap();
        let r = classify(&p, &res3, &cfg).unwrap();
        assert_eq!(r.label, Label::Free);
        assert!(r.fired(Criterion::E1));

        let res4 = Resources::new(
            SymmetryGroup::generate(4).unwrap(),
            Some(standard_mubs(4).unwrap()),
            Some(SeparableVertexSet::kernel(4).unwrap()),
            None,
        )
        .unwrap();
        let u = BellDiagonalState::uniform(4).unwrap();
        let r = classify(&u, &res4, &cfg).unwrap();
        assert_eq!(r.label, Label::Sep);
        assert!(r.fired(Criterion::S1));
        assert!(!r.conflict);
    }

    #[test]
    fn qubits_are_free_or_separable() {
        let res = Resources::minimal(2).unwrap();
        let mut r = rng::stream(61, &[]);
        let states: Vec<_> = (0..500).map(|_| sample_enclosure(2, &mut r).unwrap()).collect();
        let (recs, sum) = classify_batch(&states, None, &res, &ClassifyConfig::default()).unwrap();
        assert_eq!(recs.len(), 500);
        assert_eq!(sum.counts[&Label::Bound], 0);
        assert_eq!(sum.counts[&Label::PptUnknown], 0);
        assert_eq!(sum.counts[&Label::Sep], sum.ppt);
    }

    #[test]
    fn empty_batch() {
        let res = Resources::minimal(3).unwrap();
        let (recs, sum) = classify_batch(&[], None, &res, &ClassifyConfig::default()).unwrap();
        assert!(recs.is_empty());
        assert_eq!(sum.n, 0);
        assert!(sum.counts.values().all(|&c| c == 0));
    }

    #[test]
    fn dimension_mismatch() {
        let res = Resources::minimal(3).unwrap();
        let u = BellDiagonalState::uniform(4).unwrap();
        assert!(classify(&u, &res, &ClassifyConfig::default()).is_err());
        assert!(Resources::new(SymmetryGroup::generate(3).unwrap(), Some(standard_mubs(4).unwrap()), None, None).is_err());
    }
}
