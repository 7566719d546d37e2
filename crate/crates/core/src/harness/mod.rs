//! Experiment orchestration: JSON configs, seeded replications, the CSV
//! metrics schema and seed-level summaries.

mod config;
mod metrics;
mod run;
mod summary;

pub use config::{AlgorithmSpec, ExperimentConfig, InstanceSource};
pub use metrics::{
    determinism_hash, format_float, read_csv, read_results, write_csv, write_results, MetricsRow, HEADER,
};
pub use run::{partition_at, run_experiment, run_replication, thread_count};
pub use summary::{quantile, summarize, Stats, SummaryRow};
