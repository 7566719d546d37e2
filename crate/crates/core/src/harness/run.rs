use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{AlgorithmSpec, ExperimentConfig, MetricsRow};
use crate::baselines::{exp3_constant_experts, pac_naive, regret_ucb_per_context, BaselineConfig};
use crate::env::{exact_policy_gap, BanditInstance, EnvHandle};
use crate::error::{Error, Result};
use crate::lowrank::{lowrank_pac, lowrank_regret};
use crate::pac::{pac_general, pac_uniform, PacConfig, PacResult};
use crate::regret::{run_regret_general, run_regret_nonuniform, run_regret_uniform, RegretConfig, RegretEvent, RunTrace};
use crate::seed::{derive_seed, streams};

/// Parallel replications: `LUMPBAND_THREADS` if set, else one per CPU.
pub fn thread_count() -> Result<usize> {
    match std::env::var("LUMPBAND_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("LUMPBAND_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs one replication per seed (possibly in parallel) and returns the
/// rows ordered by `(seed, checkpoint)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let model = cfg.instance_spec()?.build().map_err(|e| Error::Config(format!("instance: {e}")))?;
    let instance = Arc::new(model.instance());
    let schedule = if cfg.algorithm.is_pac() { None } else { Some(cfg.schedule()?) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Abort(format!("thread pool: {e}")))?;
    let runs: Vec<Result<Vec<MetricsRow>>> = pool.install(|| {
        cfg.seeds.par_iter().map(|&seed| run_replication(cfg, &instance, schedule.as_deref(), seed)).collect()
    });
    let mut rows = Vec::new();
    for run in runs {
        rows.extend(run?);
    }
    rows.sort_by_key(|r| (r.seed, r.checkpoint));
    Ok(rows)
}

fn as_abort(e: Error) -> Error {
    match e {
        Error::Config(_) | Error::Abort(_) => e,
        other => Error::Abort(other.to_string()),
    }
}

fn pac_config(eps: f64, delta: f64, r: usize, step_cap: Option<u64>, scale: f64) -> PacConfig {
    let mut c = PacConfig::new(eps, delta, r).with_scale(scale);
    c.step_cap = step_cap;
    c
}

fn regret_config(r: usize, confidence: Option<f64>, scale: f64) -> RegretConfig {
    RegretConfig::new(r).with_scales(confidence.unwrap_or(1.0), scale)
}

/// One seed: the environment uses `seed` directly, the learner its named
/// stream of `seed`.
pub fn run_replication(
    cfg: &ExperimentConfig,
    instance: &Arc<BanditInstance>,
    schedule: Option<&[u64]>,
    seed: u64,
) -> Result<Vec<MetricsRow>> {
    let learner_seed = derive_seed(seed, streams::LEARNER, 0);
    let mut env = EnvHandle::new(instance.clone(), seed);
    if let Some(points) = schedule {
        env = env.with_checkpoints(points.to_vec());
    }
    let base = MetricsRow {
        experiment_id: cfg.id.clone(),
        algorithm: cfg.algorithm.id().to_owned(),
        seed,
        contexts: instance.contexts(),
        actions: instance.actions(),
        blocks: cfg.algorithm.blocks(),
        eps: cfg.algorithm.eps(),
        horizon: cfg.steps.filter(|_| schedule.is_some()),
        checkpoint: 0,
        cum_regret: 0.0,
        samples_used: None,
        policy_gap: None,
        candidate_set_size: None,
        partition_size: None,
        wall_clock_ms: 0.0,
    };
    let start = Instant::now();
    let scale = cfg.scale;
    let pac: Option<PacResult> = match cfg.algorithm {
        AlgorithmSpec::PacUniform { eps, delta, r, step_cap } => {
            Some(pac_uniform(&mut env, &pac_config(eps, delta, r, step_cap, scale), learner_seed).map_err(as_abort)?)
        }
        AlgorithmSpec::PacGeneral { eps, delta, r, step_cap } => {
            Some(pac_general(&mut env, &pac_config(eps, delta, r, step_cap, scale), learner_seed).map_err(as_abort)?)
        }
        AlgorithmSpec::NaivePac { eps, delta, step_cap } => {
            Some(pac_naive(&mut env, &pac_config(eps, delta, 1, step_cap, scale)).map_err(as_abort)?)
        }
        AlgorithmSpec::LowrankPac { eps, delta, rank, bound, step_cap } => Some(
            lowrank_pac(&mut env, rank, bound, &pac_config(eps, delta, 1, step_cap, scale), learner_seed)
                .map_err(as_abort)?,
        ),
        _ => None,
    };
    if let Some(res) = pac {
        if !res.completed {
            return Err(Error::Abort(format!("seed {seed}: step cap reached after {} steps", res.steps)));
        }
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let candidates =
            (!matches!(cfg.algorithm, AlgorithmSpec::NaivePac { .. })).then(|| res.candidates.len());
        return Ok(vec![MetricsRow {
            checkpoint: res.steps,
            cum_regret: env.regret(),
            samples_used: Some(res.breakdown.total()),
            policy_gap: Some(exact_policy_gap(instance, &res.policy)),
            candidate_set_size: candidates,
            wall_clock_ms: elapsed,
            ..base
        }]);
    }

    let horizon = cfg.steps.expect("validated");
    let trace = match cfg.algorithm {
        AlgorithmSpec::Uniform { r, confidence_scale } => {
            run_regret_uniform(&mut env, &regret_config(r, confidence_scale, scale), horizon, learner_seed)
        }
        AlgorithmSpec::Nonuniform { r, confidence_scale } => {
            run_regret_nonuniform(&mut env, &regret_config(r, confidence_scale, scale), horizon, learner_seed)
        }
        AlgorithmSpec::General { r, confidence_scale } => {
            run_regret_general(&mut env, &regret_config(r, confidence_scale, scale), horizon, learner_seed)
        }
        AlgorithmSpec::Lowrank { rank, bound, confidence_scale } => lowrank_regret(
            &mut env,
            rank,
            bound,
            horizon,
            &regret_config(1, confidence_scale, scale),
            learner_seed,
        ),
        AlgorithmSpec::Ucb { bonus } => {
            let b = BaselineConfig { ucb_bonus: bonus.unwrap_or(2.0), ..BaselineConfig::default() };
            regret_ucb_per_context(&mut env, &b, horizon)
        }
        AlgorithmSpec::Exp3 { rate } => {
            let b = BaselineConfig { exp3_rate: rate, ..BaselineConfig::default() };
            exp3_constant_experts(&mut env, &b, horizon, learner_seed)
        }
        _ => unreachable!("PAC algorithms handled above"),
    }
    .map_err(as_abort)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    Ok(trace
        .checkpoints
        .iter()
        .map(|c| MetricsRow {
            checkpoint: c.step,
            cum_regret: c.regret,
            partition_size: partition_at(&trace, c.step),
            wall_clock_ms: elapsed,
            ..base.clone()
        })
        .collect())
}

/// Partition size once `step` arrivals have been processed.
pub fn partition_at(trace: &RunTrace, step: u64) -> Option<usize> {
    let last = trace.partition_size?;
    let later: usize = trace
        .events
        .iter()
        .filter_map(|e| match e {
            RegretEvent::Split { step: s, parts, .. } if *s > step => Some(parts.len() - 1),
            _ => None,
        })
        .sum();
    Some(last - later)
}
