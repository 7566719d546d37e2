use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::env::InstanceSpec;
use crate::error::{Error, Result};
use crate::pac::PacConfig;
use crate::regret::RegretConfig;

/// Where the instance comes from: inline, or a JSON file (relative paths
/// resolve against the config file's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path { path: PathBuf },
    Inline(InstanceSpec),
}

/// Algorithm id plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    PacUniform {
        eps: f64,
        delta: f64,
        r: usize,
        #[serde(default)]
        step_cap: Option<u64>,
    },
    PacGeneral {
        eps: f64,
        delta: f64,
        r: usize,
        #[serde(default)]
        step_cap: Option<u64>,
    },
    NaivePac {
        eps: f64,
        delta: f64,
        #[serde(default)]
        step_cap: Option<u64>,
    },
    LowrankPac {
        eps: f64,
        delta: f64,
        rank: usize,
        bound: f64,
        #[serde(default)]
        step_cap: Option<u64>,
    },
    Uniform {
        r: usize,
        #[serde(default)]
        confidence_scale: Option<f64>,
    },
    Nonuniform {
        r: usize,
        #[serde(default)]
        confidence_scale: Option<f64>,
    },
    General {
        r: usize,
        #[serde(default)]
        confidence_scale: Option<f64>,
    },
    Ucb {
        #[serde(default)]
        bonus: Option<f64>,
    },
    Exp3 {
        #[serde(default)]
        rate: Option<f64>,
    },
    Lowrank {
        rank: usize,
        bound: f64,
        #[serde(default)]
        confidence_scale: Option<f64>,
    },
}

impl AlgorithmSpec {
    pub fn id(&self) -> &'static str {
        match self {
            Self::PacUniform { .. } => "pac-uniform",
            Self::PacGeneral { .. } => "pac-general",
            Self::NaivePac { .. } => "naive-pac",
            Self::LowrankPac { .. } => "lowrank-pac",
            Self::Uniform { .. } => "uniform",
            Self::Nonuniform { .. } => "nonuniform",
            Self::General { .. } => "general",
            Self::Ucb { .. } => "ucb",
            Self::Exp3 { .. } => "exp3",
            Self::Lowrank { .. } => "lowrank",
        }
    }

    pub fn is_pac(&self) -> bool {
        matches!(self, Self::PacUniform { .. } | Self::PacGeneral { .. } | Self::NaivePac { .. } | Self::LowrankPac { .. })
    }

    /// The `r` column: the block bound, or the rank for low-rank learners.
    pub fn blocks(&self) -> Option<usize> {
        match *self {
            Self::PacUniform { r, .. }
            | Self::PacGeneral { r, .. }
            | Self::Uniform { r, .. }
            | Self::Nonuniform { r, .. }
            | Self::General { r, .. } => Some(r),
            Self::LowrankPac { rank, .. } | Self::Lowrank { rank, .. } => Some(rank),
            Self::NaivePac { .. } | Self::Ucb { .. } | Self::Exp3 { .. } => None,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match *self {
            Self::PacUniform { eps, .. }
            | Self::PacGeneral { eps, .. }
            | Self::NaivePac { eps, .. }
            | Self::LowrankPac { eps, .. } => Some(eps),
            _ => None,
        }
    }
}

impl AlgorithmSpec {
    /// Parameter checks of the underlying learner, reported as configuration
    /// errors.
    pub fn validate(&self, scale: f64) -> Result<()> {
        let checked = match *self {
            Self::PacUniform { eps, delta, r, .. } | Self::PacGeneral { eps, delta, r, .. } => {
                PacConfig::new(eps, delta, r).with_scale(scale).validate()
            }
            Self::NaivePac { eps, delta, .. } => PacConfig::new(eps, delta, 1).with_scale(scale).validate(),
            Self::LowrankPac { eps, delta, rank, bound, .. } => {
                check_lowrank(rank, bound).and(PacConfig::new(eps, delta, 1).with_scale(scale).validate())
            }
            Self::Uniform { r, confidence_scale } | Self::Nonuniform { r, confidence_scale } | Self::General { r, confidence_scale } => {
                RegretConfig::new(r).with_scales(confidence_scale.unwrap_or(1.0), scale).validate()
            }
            Self::Lowrank { rank, bound, confidence_scale } => check_lowrank(rank, bound)
                .and(RegretConfig::new(1).with_scales(confidence_scale.unwrap_or(1.0), scale).validate()),
            Self::Ucb { bonus } => {
                BaselineConfig { ucb_bonus: bonus.unwrap_or(2.0), ..BaselineConfig::default() }.validate()
            }
            Self::Exp3 { rate } => BaselineConfig { exp3_rate: rate, ..BaselineConfig::default() }.validate(),
        };
        checked.map_err(|e| match e {
            Error::Validation(msg) => Error::Config(format!("{}: {msg}", self.id())),
            other => other,
        })
    }
}

fn check_lowrank(rank: usize, bound: f64) -> Result<()> {
    if rank == 0 {
        return Err(Error::Validation("rank must be at least 1".into()));
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::Validation(format!("bound B must be positive, got {bound}")));
    }
    Ok(())
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub instance: InstanceSource,
    pub algorithm: AlgorithmSpec,
    /// One replication per seed. A seed drives the environment directly and
    /// the learner through its named stream.
    pub seeds: Vec<u64>,
    /// Horizon `T` of regret runs.
    #[serde(default)]
    pub steps: Option<u64>,
    /// Explicit checkpoint steps (strictly increasing, at most `steps`).
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
    /// Alternative to `checkpoints`: every `k` steps, plus `steps`.
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Constant scale: PAC sample budgets, or the regret learners'
    /// collection budgets.
    #[serde(default = "one")]
    pub scale: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    /// Reads a config file and resolves a relative instance path against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let InstanceSource::Path { path: p } = &mut cfg.instance {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn instance_spec(&self) -> Result<InstanceSpec> {
        match &self.instance {
            InstanceSource::Inline(spec) => Ok(spec.clone()),
            InstanceSource::Path { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read instance {}: {e}", path.display())))?;
                InstanceSpec::from_json(&text)
            }
        }
    }

    /// Checkpoint steps of a regret run.
    pub fn schedule(&self) -> Result<Vec<u64>> {
        let horizon = self
            .steps
            .ok_or_else(|| Error::Config(format!("algorithm {} needs `steps`", self.algorithm.id())))?;
        if horizon == 0 {
            return Err(Error::Config("`steps` must be positive".into()));
        }
        let points = match (&self.checkpoints, self.checkpoint_every) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `checkpoints` or `checkpoint_every`, not both".into()))
            }
            (Some(list), None) => list.clone(),
            (None, Some(0)) => return Err(Error::Config("`checkpoint_every` must be positive".into())),
            (None, Some(k)) => {
                let mut v: Vec<u64> = (1..=horizon / k).map(|m| m * k).collect();
                if v.last() != Some(&horizon) {
                    v.push(horizon);
                }
                v
            }
            (None, None) => vec![horizon],
        };
        if points.is_empty() || points.windows(2).any(|w| w[0] >= w[1]) || points[0] == 0 {
            return Err(Error::Config("checkpoints must be positive and strictly increasing".into()));
        }
        if *points.last().expect("nonempty") > horizon {
            return Err(Error::Config("checkpoints must not exceed `steps`".into()));
        }
        Ok(points)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("`seeds` must be nonempty".into()));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::Config("`seeds` must be distinct".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("`scale` must be positive, got {}", self.scale)));
        }
        self.algorithm.validate(self.scale)?;
        if !self.algorithm.is_pac() {
            self.schedule()?;
        }
        Ok(())
    }
}
