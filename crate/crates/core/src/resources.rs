//! Building and caching the resources the classifier runs against.
//!
//! A [`ResourcePlan`] fixes everything that determines the resources. Files in
//! the cache directory are named after the fingerprint of the part of the plan
//! they depend on, so a changed plan never picks up a stale file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::Resources;
use crate::detectors::standard_mubs;
use crate::error::{check_dimension, Result};
use crate::hull::{extend_vertices, ExtendConfig, SeparableVertexSet};
use crate::io;
use crate::rng;
use crate::symmetry::SymmetryGroup;
use crate::witness::{WitnessBank, WitnessConfig};

const EXTEND_TAG: u64 = 0x4558;

/// Extension budget used when none is given.
pub fn default_extension_budget(d: usize) -> usize {
    match d {
        0..=2 => 0,
        3 => 200,
        _ => 300,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourcePlan {
    pub d: usize,
    pub seed: u64,
    pub witnesses: usize,
    pub extension_budget: usize,
    pub witness: WitnessConfig,
    pub extend: ExtendConfig,
}

impl ResourcePlan {
    pub fn new(d: usize, seed: u64) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self {
            d,
            seed,
            witnesses: 2000,
            extension_budget: default_extension_budget(d),
            witness: WitnessConfig::default(),
            extend: ExtendConfig::default(),
        })
    }

    fn bank_key(&self) -> String {
        io::fingerprint(&(self.d, self.seed, self.witnesses, &self.witness))
    }

    fn vertex_key(&self) -> String {
        io::fingerprint(&(self.d, self.seed, self.extension_budget, &self.extend))
    }

    pub fn bank_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("bank-d{}-{}.jsonl", self.d, self.bank_key()))
    }

    pub fn vertex_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("vertices-d{}-{}.jsonl", self.d, self.vertex_key()))
    }

    pub fn group_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("group-d{}.json", self.d))
    }
}

pub fn build_bank(plan: &ResourcePlan) -> Result<WitnessBank> {
    WitnessBank::forge(plan.d, plan.witnesses, plan.seed, &plan.witness)
}

pub fn build_vertices(plan: &ResourcePlan, group: &SymmetryGroup) -> Result<SeparableVertexSet> {
    let kernel = SeparableVertexSet::kernel(plan.d)?;
    let mut r = rng::stream(plan.seed, &[EXTEND_TAG, plan.d as u64]);
    extend_vertices(&kernel, group, &mut r, plan.extension_budget, &plan.extend)
}

/// Builds the full resources for `plan`. With a cache directory, existing
/// files are loaded and missing ones are built and written.
pub fn build_resources(plan: &ResourcePlan, cache: Option<&Path>) -> Result<Resources> {
    let d = plan.d;
    check_dimension(d)?;
    let mubs = if matches!(d, 3 | 4) { Some(standard_mubs(d)?) } else { None };
    let Some(dir) = cache else {
        let group = SymmetryGroup::generate(d)?;
        let bank = build_bank(plan)?;
        let vertices = build_vertices(plan, &group)?;
        return Resources::new(group, mubs, Some(vertices), Some(bank));
    };
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::Resource {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let group = SymmetryGroup::load_or_generate(d, &plan.group_path(dir))?;
    let bank_path = plan.bank_path(dir);
    let bank = if bank_path.exists() {
        WitnessBank::load(&bank_path)?
    } else {
        log::info!("forging {} witnesses for d={d}", plan.witnesses);
        let bank = build_bank(plan)?;
        bank.save(&bank_path)?;
        bank
    };
    let vertex_path = plan.vertex_path(dir);
    let vertices = if vertex_path.exists() {
        SeparableVertexSet::load(&vertex_path)?
    } else {
        log::info!("extending vertex set for d={d} with budget {}", plan.extension_budget);
        let vs = build_vertices(plan, &group)?;
        vs.save(&vertex_path)?;
        vs
    };
    Resources::new(group, mubs, Some(vertices), Some(bank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = ResourcePlan::new(3, 5).unwrap();
        plan.witnesses = 3;
        plan.extension_budget = 1;
        let a = build_resources(&plan, Some(dir.path())).unwrap();
        assert!(plan.bank_path(dir.path()).exists());
        assert!(plan.vertex_path(dir.path()).exists());
        let b = build_resources(&plan, Some(dir.path())).unwrap();
        assert_eq!(a.bank.unwrap().witnesses(), b.bank.unwrap().witnesses());
        assert_eq!(a.vertices.unwrap().len(), b.vertices.unwrap().len());
    }

    #[test]
    fn plan_change_changes_paths() {
        let dir = Path::new("x");
        let a = ResourcePlan::new(3, 5).unwrap();
        let mut b = a.clone();
        b.extension_budget += 1;
        assert_eq!(a.bank_path(dir), b.bank_path(dir));
        assert_ne!(a.vertex_path(dir), b.vertex_path(dir));
    }
}
