//! Closed-form entanglement and separability criteria for Bell-diagonal
//! states.
//!
//! | criterion | diagnostic | fires when |
//! |-----------|------------|------------|
//! | E1 | min eigenvalue of the partial transpose | `value < -eps_ppt` (NPT) |
//! | E2 | trace norm of the realigned matrix | `value > 1 + eps_realign` |
//! | E3 | quasi-pure concurrence | `value > eps_concurrence` |
//! | E4 | MUB sum `I_{d+1}` | `value > 2 + eps_mub` |
//! | S2 | `Σ |s_{μ,ν}|` of the Weyl representation | `value <= 2 + eps_weyl` (separable) |

mod concurrence;
mod mub;
mod ppt;
mod realign;
mod weyl_rep;

use serde::{Deserialize, Serialize};

pub use concurrence::quasipure_concurrence;
pub use mub::{default_mub_shift, mub_sum, standard_mubs, MubSet};
pub use ppt::{partial_transpose_blocks, ppt_min_eigenvalue};
pub use realign::realignment_sum;
pub use weyl_rep::{weyl_coefficients, weyl_representation_sum};

use crate::error::Result;
use crate::state::BellDiagonalState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    E1,
    E2,
    E3,
    E4,
    E5,
    S1,
    S2,
}

impl Criterion {
    /// True for the criteria that certify entanglement.
    pub fn detects_entanglement(self) -> bool {
        matches!(self, Self::E1 | Self::E2 | Self::E3 | Self::E4 | Self::E5)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::E1 => "E1",
            Self::E2 => "E2",
            Self::E3 => "E3",
            Self::E4 => "E4",
            Self::E5 => "E5",
            Self::S1 => "S1",
            Self::S2 => "S2",
        }
    }
}

/// Numerical guards on every verdict threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_ppt: f64,
    pub eps_realign: f64,
    pub eps_concurrence: f64,
    pub eps_mub: f64,
    pub eps_weyl: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_ppt: 1e-10,
            eps_realign: 1e-10,
            eps_concurrence: 1e-12,
            eps_mub: 1e-10,
            eps_weyl: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub criterion: Criterion,
    pub fired: bool,
    pub value: f64,
    pub threshold: f64,
}

impl DetectorVerdict {
    pub fn ppt(s: &BellDiagonalState, tol: &Tolerances) -> Result<Self> {
        let value = ppt_min_eigenvalue(s)?;
        let threshold = -tol.eps_ppt;
        Ok(Self { criterion: Criterion::E1, fired: value < threshold, value, threshold })
    }

    pub fn realignment(s: &BellDiagonalState, tol: &Tolerances) -> Self {
        let value = realignment_sum(s);
        let threshold = 1.0 + tol.eps_realign;
        Self { criterion: Criterion::E2, fired: value > threshold, value, threshold }
    }

    pub fn concurrence(s: &BellDiagonalState, tol: &Tolerances) -> Self {
        let value = quasipure_concurrence(s);
        let threshold = tol.eps_concurrence;
        Self { criterion: Criterion::E3, fired: value > threshold, value, threshold }
    }

    pub fn mub(s: &BellDiagonalState, mubs: &MubSet, shift: usize, tol: &Tolerances) -> Result<Self> {
        let value = mub_sum(s, mubs, shift)?;
        let threshold = 2.0 + tol.eps_mub;
        Ok(Self { criterion: Criterion::E4, fired: value > threshold, value, threshold })
    }

    pub fn weyl(s: &BellDiagonalState, tol: &Tolerances) -> Self {
        let value = weyl_representation_sum(s);
        let threshold = 2.0 + tol.eps_weyl;
        Self { criterion: Criterion::S2, fired: value <= threshold, value, threshold }
    }

    /// Fired entanglement verdict, i.e. the state is certified entangled.
    pub fn entangled(&self) -> bool {
        self.fired && self.criterion.detects_entanglement()
    }

    pub fn separable(&self) -> bool {
        self.fired && !self.criterion.detects_entanglement()
    }
}
