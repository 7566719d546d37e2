//! JSON instance documents.
//!
//! A spec either describes a generator (random parts drawn from `seed`) or,
//! after [`InstanceSpec::materialize`], spells every matrix out explicitly so
//! the file alone reproduces the instance. Matrices are nested row-major arrays.

use serde::{Deserialize, Serialize};

use super::instance::{BanditInstance, NoiseKind};
use super::lowrank::{build_lowrank_instance, LowRankModel};
use super::lumpable::{build_hard_instance, build_lumpable_instance, HardCase, RewardModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum NuShape {
    Uniform,
    /// `nu(i) ∝ (i+1)^(-exponent)`.
    PowerLaw { exponent: f64 },
    Explicit { weights: Vec<f64> },
}

impl NuShape {
    pub fn weights(&self, contexts: usize) -> Result<Vec<f64>> {
        match self {
            NuShape::Uniform => Ok(vec![1.0 / contexts as f64; contexts]),
            NuShape::PowerLaw { exponent } => {
                if !exponent.is_finite() {
                    return Err(Error::Validation("power-law exponent must be finite".into()));
                }
                let raw: Vec<f64> = (0..contexts).map(|i| ((i + 1) as f64).powf(-exponent)).collect();
                let total: f64 = raw.iter().sum();
                Ok(raw.into_iter().map(|x| x / total).collect())
            }
            NuShape::Explicit { weights } => {
                if weights.len() != contexts {
                    return Err(Error::Config(format!(
                        "explicit nu has {} entries for {contexts} contexts",
                        weights.len()
                    )));
                }
                super::instance::validate_distribution(weights)?;
                Ok(weights.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "kebab-case")]
pub enum BlockSizes {
    /// Contiguous blocks whose sizes differ by at most one.
    Equal,
    /// Contiguous blocks of the given sizes.
    Explicit { sizes: Vec<usize> },
    /// Full context-to-block map.
    Grouping { grouping: Vec<usize> },
    /// Random map with every block nonempty.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum MuSource {
    RandomUniform,
    Explicit { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LumpableSpec {
    #[serde(rename = "S")]
    pub contexts: usize,
    #[serde(rename = "K")]
    pub actions: usize,
    #[serde(rename = "r")]
    pub blocks: usize,
    #[serde(default = "default_nu")]
    pub nu: NuShape,
    #[serde(default = "default_blocks")]
    pub block_sizes: BlockSizes,
    #[serde(default = "default_mu")]
    pub mu: MuSource,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

fn default_nu() -> NuShape {
    NuShape::Uniform
}
fn default_blocks() -> BlockSizes {
    BlockSizes::Equal
}
fn default_mu() -> MuSource {
    MuSource::RandomUniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardSpec {
    pub case: u8,
    #[serde(rename = "S")]
    pub contexts: usize,
    #[serde(rename = "K")]
    pub actions: usize,
    #[serde(rename = "r")]
    pub blocks: usize,
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankSpec {
    #[serde(rename = "S")]
    pub contexts: usize,
    #[serde(rename = "K")]
    pub actions: usize,
    #[serde(rename = "r")]
    pub rank: usize,
    #[serde(rename = "B")]
    pub bound: f64,
    #[serde(default)]
    pub nonneg: bool,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub seed: u64,
    /// Explicit `U` (`S x r`) and `V` (`r x K`); overrides the generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<NuShape>,
}

/// Any instance document accepted by the harness and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    Lumpable(LumpableSpec),
    Hard(HardSpec),
    LowRank(LowRankSpec),
}

/// A built ground-truth model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lumpable(RewardModel),
    LowRank(LowRankModel),
}

impl Model {
    pub fn instance(&self) -> BanditInstance {
        match self {
            Model::Lumpable(m) => m.instance(),
            Model::LowRank(m) => m.instance(),
        }
    }

    /// Number of blocks (lumpable) or rank (low-rank).
    pub fn structure_size(&self) -> usize {
        match self {
            Model::Lumpable(m) => m.blocks(),
            Model::LowRank(m) => m.rank(),
        }
    }
}

impl InstanceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid instance document: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<Model> {
        match self {
            InstanceSpec::Lumpable(spec) => build_lumpable_instance(spec).map(Model::Lumpable),
            InstanceSpec::Hard(spec) => build_hard_instance(
                HardCase::from_id(spec.case)?,
                spec.contexts,
                spec.actions,
                spec.blocks,
                spec.eps,
                spec.seed,
            )
            .map(Model::Lumpable),
            InstanceSpec::LowRank(spec) => {
                let model = match (&spec.u, &spec.v) {
                    (Some(u), Some(v)) => {
                        let nu = spec.nu.clone().unwrap_or(NuShape::Uniform).weights(u.len())?;
                        LowRankModel::new(u.clone(), v.clone(), spec.bound, nu, spec.noise)?
                    }
                    (None, None) => {
                        let generated = build_lowrank_instance(
                            spec.contexts,
                            spec.actions,
                            spec.rank,
                            spec.bound,
                            spec.seed,
                            spec.nonneg,
                            spec.noise,
                        )?;
                        match &spec.nu {
                            None => generated,
                            Some(shape) => LowRankModel::new(
                                generated.u().to_vec(),
                                generated.v().to_vec(),
                                spec.bound,
                                shape.weights(spec.contexts)?,
                                spec.noise,
                            )?,
                        }
                    }
                    _ => return Err(Error::Config("low-rank spec needs both U and V or neither".into())),
                };
                if model.contexts() != spec.contexts
                    || model.actions() != spec.actions
                    || model.rank() != spec.rank
                {
                    return Err(Error::Config("explicit U/V dimensions disagree with S, K, r".into()));
                }
                Ok(Model::LowRank(model))
            }
        }
    }

    /// Builds the model and writes every random part back out explicitly.
    pub fn materialize(&self) -> Result<InstanceSpec> {
        Ok(match self.build()? {
            Model::Lumpable(m) => InstanceSpec::Lumpable(LumpableSpec {
                contexts: m.contexts(),
                actions: m.actions(),
                blocks: m.blocks(),
                nu: NuShape::Explicit { weights: m.nu().to_vec() },
                block_sizes: BlockSizes::Grouping { grouping: m.grouping().to_vec() },
                mu: MuSource::Explicit { rows: m.mu().to_vec() },
                noise: m.noise(),
                seed: 0,
            }),
            Model::LowRank(m) => InstanceSpec::LowRank(LowRankSpec {
                contexts: m.contexts(),
                actions: m.actions(),
                rank: m.rank(),
                bound: m.bound(),
                nonneg: false,
                noise: m.noise(),
                seed: 0,
                u: Some(m.u().to_vec()),
                v: Some(m.v().to_vec()),
                nu: Some(NuShape::Explicit { weights: m.nu().to_vec() }),
            }),
        })
    }
}
