//! PAC learners: a policy plus a certified sample count.
//!
//! [`pac_uniform`] handles almost-uniform context distributions in three
//! stages (randomized data collection over accuracy levels, screening of a
//! small candidate arm set, and a restricted per-context solve).
//! [`pac_general`] first estimates the context distribution, buckets contexts
//! by estimated mass and runs the uniform learner once per bucket.

mod general;
mod solve;
mod uniform;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::collect::Averaging;
use crate::env::Policy;
use crate::error::{Error, Result};

pub use general::{bucket_of, pac_general, GeneralBudgets, PacGeneralLearner};
pub use solve::{solve_restricted, RestrictedSolver};
pub use uniform::{pac_uniform, PacUniformLearner, UniformBudgets};

/// Parameters shared by the PAC learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacConfig {
    pub eps: f64,
    pub delta: f64,
    /// Upper bound on the number of blocks.
    pub blocks: usize,
    /// Multiplies every sample budget (collection, probes, solve, the
    /// context-estimation budget and per-bucket step budgets). Thresholds are
    /// unaffected.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub averaging: Averaging,
    /// Hard cap on environment steps; hitting it yields a result flagged
    /// incomplete.
    #[serde(default)]
    pub step_cap: Option<u64>,
}

fn one() -> f64 {
    1.0
}

impl PacConfig {
    pub fn new(eps: f64, delta: f64, blocks: usize) -> Self {
        Self { eps, delta, blocks, scale: 1.0, averaging: Averaging::FreshEpoch, step_cap: None }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(Error::Validation(format!("eps must lie in (0, 1/2], got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Validation(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.blocks == 0 {
            return Err(Error::Validation("r must be at least 1".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Validation(format!("constant scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Stage an environment step is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Estimate,
    Collect,
    Screen,
    Solve,
    /// Arrivals the learner could not use: contexts outside the active
    /// bucket, or contexts whose samples are already complete.
    Idle,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepBreakdown {
    pub estimate: u64,
    pub collect: u64,
    pub screen: u64,
    pub solve: u64,
    pub idle: u64,
}

impl StepBreakdown {
    pub fn total(&self) -> u64 {
        self.estimate + self.collect + self.screen + self.solve + self.idle
    }

    pub fn charge(&mut self, stage: Stage) {
        match stage {
            Stage::Estimate => self.estimate += 1,
            Stage::Collect => self.collect += 1,
            Stage::Screen => self.screen += 1,
            Stage::Solve => self.solve += 1,
            Stage::Idle => self.idle += 1,
        }
    }

    pub fn add(&mut self, other: &StepBreakdown) {
        self.estimate += other.estimate;
        self.collect += other.collect;
        self.screen += other.screen;
        self.solve += other.solve;
        self.idle += other.idle;
    }
}

/// Which screening iteration added an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub level: u32,
    pub context: usize,
    pub arm: usize,
}

/// The candidate arm set `W`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    arms: BTreeSet<usize>,
    provenance: Vec<Provenance>,
}

impl CandidateSet {
    pub fn insert(&mut self, origin: Provenance) {
        self.arms.insert(origin.arm);
        self.provenance.push(origin);
    }

    pub fn arms(&self) -> Vec<usize> {
        self.arms.iter().copied().collect()
    }

    pub fn contains(&self, arm: usize) -> bool {
        self.arms.contains(&arm)
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }
}

/// One pass of the screening loop: the selected pair, the contexts whose
/// pairs were dropped from `D_n`, and how many pairs remain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRecord {
    pub level: u32,
    pub context: usize,
    pub arm: usize,
    pub estimate: f64,
    pub cleared: Vec<usize>,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacResult {
    pub policy: Policy,
    pub steps: u64,
    pub breakdown: StepBreakdown,
    pub candidates: CandidateSet,
    /// `false` when the step cap aborted the run; the policy is then a best
    /// effort and carries no guarantee.
    pub completed: bool,
    pub scale: f64,
    pub screening: Vec<ScreeningRecord>,
    /// Per-bucket sub-runs of the general learner; empty otherwise.
    #[serde(default)]
    pub buckets: Vec<BucketReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub bucket: u32,
    pub contexts: Vec<usize>,
    pub steps: u64,
    /// `false` when the bucket's step budget ran out before the sub-run
    /// finished its solve stage.
    pub finished: bool,
}

/// Total-sample bound of the almost-uniform learner:
/// `524 ln(rSK/delta) (1 + 2 log2(1/eps))^2 r(S+K)/eps^2`.
pub fn uniform_sample_bound(contexts: usize, actions: usize, blocks: usize, eps: f64, delta: f64) -> f64 {
    let (s, k, r) = (contexts as f64, actions as f64, blocks as f64);
    524.0 * (r * s * k / delta).ln() * (1.0 + 2.0 * (1.0 / eps).log2()).powi(2) * r * (s + k) / (eps * eps)
}

/// Gap guarantee of the almost-uniform learner: `2(10 sqrt(ln(rSK/delta)) + 1) eps`.
pub fn uniform_gap_bound(contexts: usize, actions: usize, blocks: usize, eps: f64, delta: f64) -> f64 {
    let log = (blocks as f64 * contexts as f64 * actions as f64 / delta).ln();
    2.0 * (10.0 * log.sqrt() + 1.0) * eps
}

/// Gap guarantee of the general learner: `2 sqrt(2) (10 sqrt(ln(rSK/delta)) + 1) sqrt(L) eps`
/// with `L = ceil(log2(S/eps))` buckets.
pub fn general_gap_bound(contexts: usize, actions: usize, blocks: usize, eps: f64, delta: f64) -> f64 {
    let log = (blocks as f64 * contexts as f64 * actions as f64 / delta).ln();
    let c = 2.0 * std::f64::consts::SQRT_2 * (10.0 * log.sqrt() + 1.0);
    let buckets = (contexts as f64 / eps).log2().ceil();
    c * buckets.sqrt() * eps
}
