//! Regret minimizers: phased elimination with online clustering of contexts.
//!
//! [`run_regret_uniform`] targets uniform context and block distributions,
//! [`run_regret_nonuniform`] adds per-level accuracy sets for skewed block
//! sizes, and [`run_regret_general`] buckets contexts by estimated mass and
//! runs one non-uniform instance per bucket.

mod general;
mod phased;
mod split;

use serde::{Deserialize, Serialize};

use crate::collect::Averaging;
use crate::env::{Checkpoint, EnvHandle};
use crate::error::{Error, Result};
use crate::learner::{drive, steps_from, Learner};

pub use general::{run_regret_general, GeneralRegretLearner};
pub use phased::{PhasedLearner, Variant};
pub use split::{partition_by_gaps, split_cluster, SplitOutcome, SplitParams};

/// Knobs shared by the phased learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretConfig {
    /// Upper bound on the number of blocks.
    pub blocks: usize,
    /// Multiplies the leading constants of every `iota` (phase and split),
    /// which moves budgets and detection thresholds together.
    #[serde(default = "one")]
    pub confidence_scale: f64,
    /// Multiplies every collection budget; thresholds are unaffected.
    #[serde(default = "one")]
    pub budget_scale: f64,
    /// Replaces the phase `iota` outright (split constants unaffected).
    #[serde(default)]
    pub iota_override: Option<f64>,
    #[serde(default)]
    pub averaging: Averaging,
    /// Keep full partition and GOOD-set snapshots at the end of each phase.
    #[serde(default)]
    pub snapshots: bool,
}

fn one() -> f64 {
    1.0
}

impl RegretConfig {
    pub fn new(blocks: usize) -> Self {
        Self {
            blocks,
            confidence_scale: 1.0,
            budget_scale: 1.0,
            iota_override: None,
            averaging: Averaging::FreshEpoch,
            snapshots: false,
        }
    }

    pub fn with_scales(mut self, confidence: f64, budget: f64) -> Self {
        self.confidence_scale = confidence;
        self.budget_scale = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 {
            return Err(Error::Validation("r must be at least 1".into()));
        }
        for (name, v) in [("confidence scale", self.confidence_scale), ("budget scale", self.budget_scale)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(iota) = self.iota_override {
            if !(iota > 0.0 && iota.is_finite()) {
                return Err(Error::Validation(format!("iota override must be positive, got {iota}")));
            }
        }
        Ok(())
    }
}

/// Per-phase constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub phase: u32,
    /// `2^{-h/2}`.
    pub eps: f64,
    /// `eps^2 / (r^3 S K)`.
    pub delta: f64,
    pub iota: f64,
    /// `sqrt(iota) eps`.
    pub tilde_eps: f64,
    /// Accuracy levels run this phase: 1 (at level `h`) for the uniform
    /// variant, `h` (levels `1..=h`) for the non-uniform one.
    pub levels: u32,
}

impl PhaseSchedule {
    pub fn new(variant: Variant, phase: u32, contexts: usize, actions: usize, cfg: &RegretConfig) -> Self {
        assert!(phase >= 1);
        let (s, k, r) = (contexts as f64, actions as f64, cfg.blocks as f64);
        let eps = 2f64.powf(-(phase as f64) / 2.0);
        let delta = eps * eps / (r.powi(3) * s * k);
        let iota = cfg.iota_override.unwrap_or_else(|| match variant {
            Variant::Uniform => cfg.confidence_scale * 64.0 * (r * s * k / delta).ln(),
            Variant::NonUniform => cfg.confidence_scale * 128.0 * (r * s * k * phase as f64 / delta).ln(),
        });
        let levels = match variant {
            Variant::Uniform => 1,
            Variant::NonUniform => phase,
        };
        Self { phase, eps, delta, iota, tilde_eps: iota.sqrt() * eps, levels }
    }

    /// Detection threshold at accuracy level `n`: `sqrt(iota / 2^n)`. At
    /// `n = h` this is `tilde_eps`.
    pub fn threshold(&self, level: u32) -> f64 {
        (self.iota / 2f64.powi(level as i32)).sqrt()
    }

    /// Uniform-variant collection budget `r(S+K) iota / eps^2`.
    pub fn uniform_budget(&self, contexts: usize, actions: usize, blocks: usize, scale: f64) -> u64 {
        let w = blocks as f64 * (contexts + actions) as f64;
        steps_from(scale * w * self.iota / (self.eps * self.eps)).max(1)
    }

    /// Non-uniform collection budget at level `n`: `r(S+K) iota 2^{(n+h)/2}`.
    pub fn level_budget(&self, level: u32, contexts: usize, actions: usize, blocks: usize, scale: f64) -> u64 {
        let w = blocks as f64 * (contexts + actions) as f64;
        steps_from(scale * w * self.iota * 2f64.powf((level + self.phase) as f64 / 2.0)).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum RegretEvent {
    PhaseStart {
        step: u64,
        phase: u32,
    },
    /// A cluster was replaced by two or more parts.
    Split {
        step: u64,
        phase: u32,
        level: u32,
        arm: usize,
        witness: (usize, usize),
        cluster: Vec<usize>,
        parts: Vec<Vec<usize>>,
        /// Contexts without a split estimate, appended to the last part.
        unlabeled: Vec<usize>,
    },
    /// A split call returned a single part; the cluster is exempt from gap
    /// detection for the rest of the phase.
    SplitRejected {
        step: u64,
        phase: u32,
        level: u32,
        arm: usize,
        cluster: Vec<usize>,
    },
    Eliminate {
        step: u64,
        phase: u32,
        level: u32,
        cluster: Vec<usize>,
        removed: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "kebab-case")]
pub enum TraceFlag {
    /// The partition grew beyond the block bound `r`.
    PartitionExceedsBlocks { step: u64, phase: u32, size: usize },
    /// Elimination emptied a GOOD set and the best arm was restored.
    GoodRestored { step: u64, phase: u32, level: u32 },
    /// Rewards outside `[0, 1]` were clipped.
    RewardClipped { count: u64 },
    /// Contexts with estimated mass below the cutoff, served arm 0.
    LowMassContexts { contexts: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: u32,
    pub start_step: u64,
    pub end_step: u64,
    pub eps: f64,
    pub iota: f64,
    /// Partition size at the end of the phase.
    pub partition_size: usize,
    /// Total size of the top-level GOOD sets at the end of the phase.
    pub good_total: usize,
    /// Bucket of the general-context wrapper that ran this phase.
    #[serde(default)]
    pub bucket: Option<u32>,
}

/// Partition and per-level GOOD sets after a phase's elimination step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSnapshot {
    pub phase: u32,
    pub step: u64,
    pub clusters: Vec<Vec<usize>>,
    /// `good[c][k]` is the GOOD set of cluster `c` at level index `k`.
    pub good: Vec<Vec<Vec<usize>>>,
}

/// Everything a regret run reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: String,
    pub steps: u64,
    pub regret: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub events: Vec<RegretEvent>,
    pub phases: Vec<PhaseSummary>,
    pub snapshots: Vec<PhaseSnapshot>,
    pub flags: Vec<TraceFlag>,
    /// Final number of clusters, for the clustering learners.
    pub partition_size: Option<usize>,
}

impl RegretEvent {
    pub fn step(&self) -> u64 {
        match self {
            Self::PhaseStart { step, .. }
            | Self::Split { step, .. }
            | Self::SplitRejected { step, .. }
            | Self::Eliminate { step, .. } => *step,
        }
    }
}

impl RunTrace {
    pub fn splits(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, RegretEvent::Split { .. })).count()
    }
}

/// Learners that can summarize themselves into a [`RunTrace`].
pub trait Traced: Learner {
    fn algorithm(&self) -> &str;

    /// Fills the learner-side parts of the trace (events, phases, flags).
    fn fill(self, trace: &mut RunTrace);
}

/// Drives a learner for at most `max_steps` and assembles its trace from
/// the environment's regret accounting.
pub fn run_traced<L: Traced>(env: &mut EnvHandle, mut learner: L, max_steps: Option<u64>) -> Result<RunTrace> {
    drive(env, &mut learner, max_steps)?;
    let mut trace = RunTrace {
        algorithm: learner.algorithm().to_owned(),
        steps: env.step(),
        regret: env.regret(),
        checkpoints: env.checkpoints().to_vec(),
        ..RunTrace::default()
    };
    learner.fill(&mut trace);
    Ok(trace)
}

/// Runs the uniform-block learner for `max_steps` steps.
pub fn run_regret_uniform(env: &mut EnvHandle, cfg: &RegretConfig, max_steps: u64, seed: u64) -> Result<RunTrace> {
    cfg.validate()?;
    let learner = PhasedLearner::new(Variant::Uniform, env.contexts(), env.actions(), cfg.clone(), seed);
    run_traced(env, learner, Some(max_steps))
}

/// Runs the non-uniform-block learner for `max_steps` steps.
pub fn run_regret_nonuniform(env: &mut EnvHandle, cfg: &RegretConfig, max_steps: u64, seed: u64) -> Result<RunTrace> {
    cfg.validate()?;
    let learner = PhasedLearner::new(Variant::NonUniform, env.contexts(), env.actions(), cfg.clone(), seed);
    run_traced(env, learner, Some(max_steps))
}
