//! Ground-truth environments.
//!
//! A [`RewardModel`] (context-lumpable) or [`LowRankModel`] is compiled into a
//! dense [`BanditInstance`], which an [`EnvHandle`] drives through the
//! sequential protocol: sample a context, pull an arm, observe a noisy reward.
//! Contexts and arms are 0-based everywhere in this crate.

mod handle;
mod instance;
mod lowrank;
mod lumpable;
mod spec;

pub use handle::{Checkpoint, EnvHandle, StepRecord};
pub use instance::{exact_policy_gap, BanditInstance, NoiseKind, Policy};
pub use lowrank::{build_lowrank_instance, LowRankModel};
pub use lumpable::{build_hard_instance, build_lumpable_instance, HardCase, RewardModel};
pub use spec::{
    BlockSizes, HardSpec, InstanceSpec, LowRankSpec, LumpableSpec, Model, MuSource, NuShape,
};
