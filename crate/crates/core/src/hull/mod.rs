//! Inner approximation of the separable Bell-diagonal states by the convex hull
//! of certified separable vertices.
//!
//! Membership is decided with Wolfe's minimum-norm-point method: the target is
//! in the hull iff the hull, shifted by the target, contains the origin. The
//! same solver, fed by a product-state oracle instead of a finite vertex list,
//! produces explicit separable decompositions.

mod certificate;
mod mnp;

use std::collections::HashSet;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use certificate::Certificate;

use crate::detectors::{ppt_min_eigenvalue, realignment_sum};
use crate::error::{check_dimension, Error, Result};
use crate::io;
use crate::product::{minimize_product_from, ProductConfig};
use crate::state::{kernel_vertices, sample_enclosure, twirled_product, BellDiagonalState};
use crate::symmetry::{coordinate_key, SymmetryGroup};
use mnp::{min_norm_point, AtomOracle, FiniteOracle, MnpConfig};

/// Vertices must pass E1 and E2 non-detection within these guards.
const VERTEX_PPT_EPS: f64 = 1e-10;
const VERTEX_REALIGN_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    KernelCoset,
    OrbitImage,
    CertifiedExtension,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub state: BellDiagonalState,
    pub provenance: Provenance,
    pub certificate: Option<Certificate>,
}

/// One line of a vertex file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexRecord {
    pub d: usize,
    pub c: Vec<f64>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullConfig {
    pub max_iter: usize,
    /// Distance from the hull below which the solver reports membership.
    pub dist_tol: f64,
    /// Reconstruction tolerance for accepted memberships.
    pub feasibility_tol: f64,
}

impl Default for HullConfig {
    fn default() -> Self {
        Self { max_iter: 10_000, dist_tol: 1e-11, feasibility_tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HullResult {
    pub member: bool,
    pub distance: f64,
    /// `(vertex index, weight)` pairs of the convex combination found.
    pub weights: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default)]
pub struct SeparableVertexSet {
    d: usize,
    vertices: Vec<Vertex>,
    keys: HashSet<Vec<i64>>,
}

impl PartialEq for SeparableVertexSet {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.vertices == other.vertices
    }
}

impl SeparableVertexSet {
    pub fn empty(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self { d, vertices: Vec::new(), keys: HashSet::new() })
    }

    /// The coset states of all order-`d` subgroups.
    pub fn kernel(d: usize) -> Result<Self> {
        let mut vs = Self::empty(d)?;
        for v in kernel_vertices(d)? {
            vs.push(Vertex { state: v.state, provenance: Provenance::KernelCoset, certificate: None })?;
        }
        Ok(vs)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn contains_point(&self, c: &[f64]) -> bool {
        self.keys.contains(&coordinate_key(c))
    }

    /// Adds a vertex after checking the set invariants. Returns `false` for a
    /// duplicate.
    pub fn push(&mut self, v: Vertex) -> Result<bool> {
        if v.state.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: v.state.d() });
        }
        validate_vertex(&v, None)?;
        if !self.keys.insert(coordinate_key(v.state.coords())) {
            return Ok(false);
        }
        self.vertices.push(v);
        Ok(true)
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.vertices.iter().filter(|v| v.provenance == p).count()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let recs: Vec<VertexRecord> = self
            .vertices
            .iter()
            .map(|v| VertexRecord {
                d: self.d,
                c: v.state.coords().to_vec(),
                provenance: v.provenance,
                certificate: v.certificate.clone(),
            })
            .collect();
        io::write_jsonl(path, &recs)
    }

    /// Loads a vertex file, re-verifying every vertex and certificate.
    pub fn load(path: &Path) -> Result<Self> {
        let recs: Vec<VertexRecord> = io::read_jsonl(path)?;
        let resource = |message: String| Error::Resource { path: path.to_path_buf(), message };
        let d = recs.first().map(|r| r.d).ok_or_else(|| resource("empty vertex file".into()))?;
        let mut vs = Self::empty(d)?;
        for (n, r) in recs.into_iter().enumerate() {
            if r.d != d {
                return Err(resource(format!("line {}: vertices of mixed dimension", n + 1)));
            }
            let state = BellDiagonalState::new(d, r.c).map_err(|e| resource(format!("line {}: {e}", n + 1)))?;
            vs.push(Vertex { state, provenance: r.provenance, certificate: r.certificate })
                .map_err(|e| resource(format!("line {}: {e}", n + 1)))?;
        }
        Ok(vs)
    }
}

/// Checks E1/E2 non-detection and, for extension vertices, the certificate.
fn validate_vertex(v: &Vertex, residual_tol: Option<f64>) -> Result<()> {
    if ppt_min_eigenvalue(&v.state)? < -VERTEX_PPT_EPS {
        return Err(Error::InvalidState("separable vertex must be PPT".into()));
    }
    if realignment_sum(&v.state) > 1.0 + VERTEX_REALIGN_EPS {
        return Err(Error::InvalidState("separable vertex violates the realignment bound".into()));
    }
    if v.provenance == Provenance::CertifiedExtension {
        let cert = v
            .certificate
            .as_ref()
            .ok_or_else(|| Error::Certification("extension vertex without certificate".into()))?;
        let res = cert.residual(&v.state)?;
        if res > residual_tol.unwrap_or(CertifyConfig::default().residual_tol) {
            return Err(Error::Certification(format!("certificate residual {res:.3e}")));
        }
    }
    Ok(())
}

fn mnp_config(cfg: &HullConfig) -> MnpConfig {
    MnpConfig { max_iter: cfg.max_iter, dist_tol: cfg.dist_tol, gap_tol: 1e-13 }
}

/// Convex decomposition of `s` over the vertex set, if one exists.
pub fn hull_decomposition(vs: &SeparableVertexSet, s: &BellDiagonalState, cfg: &HullConfig) -> Result<HullResult> {
    hull_decomposition_coords(vs, s.coords(), cfg)
}

pub fn hull_decomposition_coords(vs: &SeparableVertexSet, c: &[f64], cfg: &HullConfig) -> Result<HullResult> {
    if c.len() != vs.d * vs.d {
        return Err(Error::DimensionMismatch { expected: vs.d * vs.d, actual: c.len() });
    }
    let atoms: Vec<&[f64]> = vs.vertices.iter().map(|v| v.state.coords()).collect();
    let mut oracle = FiniteOracle::new(&atoms, c);
    let Some(first) = oracle.nearest() else {
        return Ok(HullResult { member: false, distance: f64::INFINITY, weights: Vec::new() });
    };
    let out = min_norm_point(&mut oracle, c.len(), first, &mnp_config(cfg))?;
    if !out.converged {
        return Err(Error::HullSolver(format!("no convergence after {} iterations", out.iterations)));
    }
    let weights: Vec<(usize, f64)> = out.corral.iter().copied().zip(out.weights.iter().copied()).collect();
    let mut member = out.distance <= cfg.dist_tol;
    if member {
        // independent reconstruction guards the verdict
        let mut rec = vec![0.0; c.len()];
        for &(i, w) in &weights {
            for (r, x) in rec.iter_mut().zip(vs.vertices[i].state.coords()) {
                *r += w * x;
            }
        }
        let err = rec.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        member = err <= cfg.feasibility_tol;
    }
    Ok(HullResult { member, distance: out.distance, weights })
}

/// `true` iff `s` is a convex combination of the vertices; `true` certifies
/// separability.
pub fn hull_membership(vs: &SeparableVertexSet, s: &BellDiagonalState) -> Result<bool> {
    if s.d() != vs.d {
        return Err(Error::DimensionMismatch { expected: vs.d, actual: s.d() });
    }
    Ok(hull_decomposition(vs, s, &HullConfig::default())?.member)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub product: ProductConfig,
    pub max_iter: usize,
    /// Coordinate distance at which the decomposition is considered exact.
    pub dist_tol: f64,
    /// Bound on the Frobenius residual of an accepted certificate.
    pub residual_tol: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            product: ProductConfig { restarts: 4, ..ProductConfig::default() },
            max_iter: 400,
            dist_tol: 1e-10,
            residual_tol: 1e-7,
        }
    }
}

/// A twirled product state `c = twirl(a ⊗ b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductAtom {
    pub c: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl ProductAtom {
    pub fn new(d: usize, a: Vec<Complex64>, b: Vec<Complex64>) -> Self {
        Self { c: twirled_product(d, &a, &b), a, b }
    }

    pub fn certificate(&self, d: usize) -> Result<Certificate> {
        Certificate::twirl_orbit(d, &self.a, &self.b)
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub atoms: Vec<ProductAtom>,
    pub weights: Vec<f64>,
    pub certificate: Certificate,
    pub residual: f64,
}

const WARM_STARTS: usize = 2;

/// Product-state oracle with a lazily consulted atom cache.
struct ProductOracle<'a, R: Rng + ?Sized> {
    d: usize,
    target: Vec<f64>,
    shifted: Vec<Vec<f64>>,
    atoms: Vec<ProductAtom>,
    cfg: &'a ProductConfig,
    rng: &'a mut R,
    last_gap: f64,
}

impl<'a, R: Rng + ?Sized> ProductOracle<'a, R> {
    fn new(d: usize, target: &[f64], pool: &[ProductAtom], cfg: &'a ProductConfig, rng: &'a mut R) -> Self {
        let mut o = Self {
            d,
            target: target.to_vec(),
            shifted: Vec::new(),
            atoms: Vec::new(),
            cfg,
            rng,
            last_gap: f64::INFINITY,
        };
        for a in pool {
            o.add(a.clone());
        }
        o
    }

    fn add(&mut self, atom: ProductAtom) -> usize {
        self.shifted.push(atom.c.iter().zip(&self.target).map(|(x, t)| x - t).collect());
        self.atoms.push(atom);
        self.atoms.len() - 1
    }

    /// Global step: optimize over all product states, starting from the best
    /// cached atoms as well as from random points.
    fn global(&mut self, x: &[f64]) -> Result<(f64, usize)> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let kappa: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let mut ranked: Vec<(f64, usize)> = self.shifted.iter().enumerate().map(|(i, p)| (dot(x, p), i)).collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let starts: Vec<(&[Complex64], &[Complex64])> = ranked
            .iter()
            .take(WARM_STARTS)
            .map(|&(_, i)| (self.atoms[i].a.as_slice(), self.atoms[i].b.as_slice()))
            .collect();
        let opt = minimize_product_from(self.d, &kappa, &starts, self.cfg, self.rng)?;
        let id = self.add(ProductAtom::new(self.d, opt.a, opt.b));
        Ok((dot(x, &self.shifted[id]), id))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<R: Rng + ?Sized> AtomOracle for ProductOracle<'_, R> {
    fn minimize(&mut self, x: &[f64], corral: &[usize]) -> Result<(f64, usize)> {
        let xx = dot(x, x);
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, p) in self.shifted.iter().enumerate() {
            if corral.contains(&i) {
                continue;
            }
            let v = dot(x, p);
            if v < best.0 {
                best = (v, i);
            }
        }
        if best.1 != usize::MAX && xx - best.0 > 0.5 * self.last_gap {
            return Ok(best);
        }
        let (v, id) = self.global(x)?;
        let (v, id) = if best.0 < v { best } else { (v, id) };
        self.last_gap = xx - v;
        Ok((v, id))
    }

    fn point(&self, id: usize) -> &[f64] {
        &self.shifted[id]
    }
}

fn certify_with_pool<R: Rng + ?Sized>(
    s: &BellDiagonalState,
    cfg: &CertifyConfig,
    rng: &mut R,
    pool: &[ProductAtom],
) -> Result<Option<Decomposition>> {
    let d = s.d();
    let c = s.coords();
    let mut oracle = ProductOracle::new(d, c, pool, &cfg.product, rng);
    // start from the product state with the largest overlap with the target
    let neg: Vec<f64> = c.iter().map(|v| -v).collect();
    let (_, first) = oracle.global(&neg)?;
    oracle.last_gap = f64::INFINITY;
    let mcfg = MnpConfig { max_iter: cfg.max_iter, dist_tol: cfg.dist_tol, gap_tol: 1e-13 };
    let out = min_norm_point(&mut oracle, c.len(), first, &mcfg)?;
    if out.distance > cfg.dist_tol {
        return Ok(None);
    }
    let atoms: Vec<ProductAtom> = out.corral.iter().map(|&i| oracle.atoms[i].clone()).collect();
    let parts: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> =
        atoms.iter().zip(&out.weights).map(|(a, &w)| (w, a.a.clone(), a.b.clone())).collect();
    let certificate = Certificate::mixture(d, &parts)?;
    let residual = certificate.residual(s)?;
    if residual > cfg.residual_tol {
        return Ok(None);
    }
    Ok(Some(Decomposition { atoms, weights: out.weights, certificate, residual }))
}

/// Searches for an explicit separable decomposition of `s`. `None` means no
/// decomposition was found, which says nothing about entanglement.
pub fn certify_separable<R: Rng + ?Sized>(
    s: &BellDiagonalState,
    cfg: &CertifyConfig,
    rng: &mut R,
) -> Result<Option<Decomposition>> {
    if ppt_min_eigenvalue(s)? < -VERTEX_PPT_EPS {
        return Ok(None);
    }
    certify_with_pool(s, cfg, rng, &[])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendConfig {
    pub certify: CertifyConfig,
    pub hull: HullConfig,
    /// Resolution of the bisection along the ray from the uniform state.
    pub resolution: f64,
    /// Proposal cap as a multiple of the budget.
    pub max_proposals_factor: usize,
    /// Also add the symmetry orbits of newly certified atoms.
    pub close_extensions: bool,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        Self {
            certify: CertifyConfig::default(),
            hull: HullConfig::default(),
            resolution: 1e-3,
            max_proposals_factor: 50,
            close_extensions: false,
        }
    }
}

fn ray_point(u: &[f64], t: &[f64], lambda: f64) -> Vec<f64> {
    u.iter().zip(t).map(|(a, b)| a + lambda * (b - a)).collect()
}

fn add_orbit(vs: &mut SeparableVertexSet, group: &SymmetryGroup, c: &[f64]) -> Result<()> {
    for g in group.elements() {
        let img = g.permute(c);
        if !vs.contains_point(&img) {
            let state = BellDiagonalState::new(vs.d, img)?;
            vs.push(Vertex { state, provenance: Provenance::OrbitImage, certificate: None })?;
        }
    }
    Ok(())
}

/// Grows the vertex set. First the symmetry orbits of kernel and orbit
/// vertices are closed. Then, for each budget unit, a random PPT target in the
/// enclosure polytope (mapped to its canonical orbit representative) that the
/// hull does not yet contain is pushed as far from the uniform state as
/// certification allows. The product atoms of that certificate become new
/// vertices. Vertices are never removed.
pub fn extend_vertices<R: Rng + ?Sized>(
    vs: &SeparableVertexSet,
    group: &SymmetryGroup,
    rng: &mut R,
    budget: usize,
    cfg: &ExtendConfig,
) -> Result<SeparableVertexSet> {
    let d = vs.d;
    if group.d() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: group.d() });
    }
    let mut out = vs.clone();
    if budget == 0 {
        return Ok(out);
    }
    let seeds: Vec<Vec<f64>> = out
        .vertices
        .iter()
        .filter(|v| v.provenance != Provenance::CertifiedExtension || cfg.close_extensions)
        .map(|v| v.state.coords().to_vec())
        .collect();
    for c in &seeds {
        add_orbit(&mut out, group, c)?;
    }

    let u = BellDiagonalState::uniform(d)?.into_coords();
    let mut pool: Vec<ProductAtom> = Vec::new();
    let mut used = 0;
    let mut proposals = 0;
    while used < budget && proposals < cfg.max_proposals_factor * budget {
        proposals += 1;
        let t = sample_enclosure(d, rng)?;
        if ppt_min_eigenvalue(&t)? < -VERTEX_PPT_EPS {
            continue;
        }
        let (_, t) = group.canonical_image(t.coords());
        if hull_decomposition_coords(&out, &t, &cfg.hull)?.member {
            continue;
        }
        used += 1;

        // the current hull already certifies part of the ray
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > cfg.resolution {
            let mid = 0.5 * (lo + hi);
            if hull_decomposition_coords(&out, &ray_point(&u, &t, mid), &cfg.hull)?.member {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let hull_lo = lo;
        let mut best: Option<Decomposition> = None;
        let attempt = |lambda: f64, pool: &[ProductAtom], rng: &mut R| -> Result<Option<Decomposition>> {
            let s = BellDiagonalState::new(d, ray_point(&u, &t, lambda))?;
            certify_with_pool(&s, &cfg.certify, rng, pool)
        };
        if let Some(dec) = attempt(1.0, &pool, rng)? {
            best = Some(dec);
        } else {
            let (mut lo, mut hi) = (hull_lo, 1.0);
            while hi - lo > cfg.resolution {
                let mid = 0.5 * (lo + hi);
                match attempt(mid, &pool, rng)? {
                    Some(dec) => {
                        lo = mid;
                        pool.extend(dec.atoms.iter().cloned());
                        best = Some(dec);
                    }
                    None => hi = mid,
                }
            }
        }
        let Some(dec) = best else {
            log::debug!("extension target {used}: nothing beyond the current hull");
            continue;
        };
        for atom in &dec.atoms {
            if out.contains_point(&atom.c) {
                continue;
            }
            let state = BellDiagonalState::new(d, atom.c.clone())?;
            let v = Vertex {
                state,
                provenance: Provenance::CertifiedExtension,
                certificate: Some(atom.certificate(d)?),
            };
            match out.push(v) {
                Ok(_) => {}
                // atoms come straight from the optimizer; an atom that fails
                // the vertex checks is dropped rather than trusted
                Err(e) => {
                    log::warn!("dropping extension atom: {e}");
                    continue;
                }
            }
            if cfg.close_extensions {
                add_orbit(&mut out, group, &atom.c)?;
            }
        }
        pool.extend(dec.atoms);
        if pool.len() > 64 * d * d {
            let excess = pool.len() - 64 * d * d;
            pool.drain(..excess);
        }
    }
    log::info!(
        "vertex extension: {used} targets from {proposals} proposals, {} -> {} vertices",
        vs.len(),
        out.len()
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn membership_examples() {
        for d in 2..=4 {
            let vs = SeparableVertexSet::kernel(d).unwrap();
            assert!(hull_membership(&vs, &BellDiagonalState::uniform(d).unwrap()).unwrap());
            for v in vs.vertices() {
                assert!(hull_membership(&vs, &v.state).unwrap());
            }
            assert!(!hull_membership(&vs, &BellDiagonalState::indicator(d, 0, 0).unwrap()).unwrap());
        }
    }

    #[test]
    fn certify_examples() {
        let cfg = CertifyConfig::default();
        let mut r = rng::stream(51, &[]);
        let u = BellDiagonalState::uniform(3).unwrap();
        let dec = certify_separable(&u, &cfg, &mut r).unwrap().expect("uniform is separable");
        assert!(dec.certificate.residual(&u).unwrap() <= 1e-7);
        let k = &kernel_vertices(3).unwrap()[0].state;
        let dec = certify_separable(k, &cfg, &mut r).unwrap().expect("kernel vertex is separable");
        assert!(dec.certificate.residual(k).unwrap() <= 1e-7);
        let p = BellDiagonalState::indicator(3, 0, 0).unwrap();
        assert!(certify_separable(&p, &cfg, &mut r).unwrap().is_none());
    }

    #[test]
    fn extension_with_zero_budget_is_identity() {
        let vs = SeparableVertexSet::kernel(3).unwrap();
        let g = SymmetryGroup::generate(3).unwrap();
        let out = extend_vertices(&vs, &g, &mut rng::stream(52, &[]), 0, &ExtendConfig::default()).unwrap();
        assert_eq!(out, vs);
    }

    #[test]
    fn vertex_file_round_trip() {
        let vs = SeparableVertexSet::kernel(3).unwrap();
        let g = SymmetryGroup::generate(3).unwrap();
        let ext = extend_vertices(&vs, &g, &mut rng::stream(53, &[]), 3, &ExtendConfig::default()).unwrap();
        assert!(ext.count(Provenance::CertifiedExtension) > 0);
        assert_eq!(ext.count(Provenance::KernelCoset), 12);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        ext.save(&path).unwrap();
        assert_eq!(SeparableVertexSet::load(&path).unwrap(), ext);
    }

    #[test]
    fn rejects_entangled_vertex() {
        let mut vs = SeparableVertexSet::empty(2).unwrap();
        let p = BellDiagonalState::indicator(2, 0, 0).unwrap();
        assert!(vs.push(Vertex { state: p, provenance: Provenance::OrbitImage, certificate: None }).is_err());
        let u = BellDiagonalState::uniform(2).unwrap();
        let no_cert = Vertex { state: u, provenance: Provenance::CertifiedExtension, certificate: None };
        assert!(matches!(vs.push(no_cert), Err(Error::Certification(_))));
    }
}
