//! Context-lumpable stochastic bandits.
//!
//! The crate bundles ground-truth environments ([`env`]), the shared
//! randomized data-collection engine ([`collect`]), PAC learners ([`pac`]),
//! phased-elimination regret learners with online clustering ([`regret`]),
//! the low-rank grid reduction ([`lowrank`]), naive reference learners
//! ([`baselines`]) and a seeded experiment harness ([`harness`]).

pub mod baselines;
pub mod collect;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod lowrank;
pub mod pac;
pub mod regret;
pub mod seed;

pub use collect::{collect, estimate_context_distribution, Averaging, CollectOutput, ExploreSets};
pub use env::{exact_policy_gap, BanditInstance, EnvHandle, InstanceSpec, Model, NoiseKind, Policy, RewardModel};
pub use error::{Error, Result};
pub use learner::{drive, Learner};
pub use baselines::{exp3_constant_experts, pac_naive, regret_ucb_per_context, BaselineConfig};
pub use harness::{run_experiment, summarize, write_results, ExperimentConfig, MetricsRow};
pub use lowrank::{grid_cell, lowrank_pac, lowrank_regret, GridReduction};
pub use pac::{pac_general, pac_uniform, solve_restricted, CandidateSet, PacConfig, PacResult};
pub use regret::{
    run_regret_general, run_regret_nonuniform, run_regret_uniform, split_cluster, RegretConfig, RunTrace,
};
