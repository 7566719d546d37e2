//! Arbitrary context distributions: estimate the distribution, bucket
//! contexts by estimated mass, and run one non-uniform learner per bucket.

use super::phased::{PhasedLearner, TraceParts, Variant};
use super::{run_traced, RegretConfig, RunTrace, TraceFlag, Traced};
use crate::collect::ContextCounter;
use crate::env::EnvHandle;
use crate::error::{Error, Result};
use crate::learner::{steps_from, Learner};
use crate::pac::bucket_of;
use crate::seed::derive_seed;

#[derive(Debug)]
enum Stage {
    Prefix(ContextCounter),
    Routed,
}

#[derive(Debug)]
pub struct GeneralRegretLearner {
    contexts: usize,
    actions: usize,
    horizon: u64,
    cfg: RegretConfig,
    seed: u64,
    stage: Stage,
    clock: u64,
    /// `(bucket slot, local index)` per context; `None` for low-mass contexts.
    route: Vec<Option<(usize, usize)>>,
    subs: Vec<(u32, PhasedLearner)>,
    low_mass: Vec<usize>,
}

impl GeneralRegretLearner {
    /// Estimation prefix `ceil(sqrt(ST) ln(ST))`.
    pub fn prefix_len(contexts: usize, horizon: u64) -> u64 {
        let st = contexts as f64 * horizon as f64;
        steps_from(st.sqrt() * st.ln())
    }

    pub fn new(contexts: usize, actions: usize, horizon: u64, cfg: RegretConfig, seed: u64) -> Self {
        let prefix = Self::prefix_len(contexts, horizon);
        let mut learner = Self {
            contexts,
            actions,
            horizon,
            cfg,
            seed,
            stage: Stage::Prefix(ContextCounter::new(contexts, prefix, 0)),
            clock: 0,
            route: vec![None; contexts],
            subs: Vec::new(),
            low_mass: Vec::new(),
        };
        if prefix == 0 {
            learner.stage = Stage::Routed;
            learner.assign(&vec![1.0 / contexts as f64; contexts]);
        }
        learner
    }

    /// Mass below which a context is served arm 0: `1/sqrt(ST)`.
    pub fn cutoff(&self) -> f64 {
        1.0 / (self.contexts as f64 * self.horizon as f64).sqrt()
    }

    /// Active buckets as `(bucket, contexts)`.
    pub fn buckets(&self) -> Vec<(u32, Vec<usize>)> {
        let mut out: Vec<(u32, Vec<usize>)> = self.subs.iter().map(|(b, _)| (*b, Vec::new())).collect();
        for (i, r) in self.route.iter().enumerate() {
            if let Some((slot, _)) = r {
                out[*slot].1.push(i);
            }
        }
        out
    }

    pub fn low_mass(&self) -> &[usize] {
        &self.low_mass
    }

    fn assign(&mut self, freq: &[f64]) {
        let cutoff = self.cutoff();
        let levels = ((1.0 / cutoff).log2().ceil() as u32) + 1;
        let mut members: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for (i, &f) in freq.iter().enumerate() {
            if f < cutoff || f == 0.0 {
                self.low_mass.push(i);
            } else {
                members.entry(bucket_of(f, levels)).or_default().push(i);
            }
        }
        for (bucket, ctx) in members {
            let slot = self.subs.len();
            for (k, &i) in ctx.iter().enumerate() {
                self.route[i] = Some((slot, k));
            }
            let seed = derive_seed(self.seed, "bucket", bucket as u64);
            let learner = PhasedLearner::new(Variant::NonUniform, ctx.len(), self.actions, self.cfg.clone(), seed)
                .with_labels(ctx);
            self.subs.push((bucket, learner));
        }
    }
}

impl Learner for GeneralRegretLearner {
    fn act(&mut self, context: usize) -> usize {
        match &self.stage {
            Stage::Prefix(counter) => counter.arm(),
            Stage::Routed => match self.route[context] {
                Some((slot, k)) => self.subs[slot].1.act(k),
                None => 0,
            },
        }
    }

    fn observe(&mut self, context: usize, _arm: usize, reward: f64) {
        self.clock += 1;
        match &mut self.stage {
            Stage::Prefix(counter) => {
                counter.record(context);
                if counter.is_done() {
                    let Stage::Prefix(counter) = std::mem::replace(&mut self.stage, Stage::Routed) else {
                        unreachable!()
                    };
                    self.assign(&counter.finish().frequencies);
                }
            }
            Stage::Routed => {
                if let Some((slot, k)) = self.route[context] {
                    self.subs[slot].1.observe_at(self.clock, k, reward);
                }
            }
        }
    }
}

impl Traced for GeneralRegretLearner {
    fn algorithm(&self) -> &str {
        "general"
    }

    fn fill(self, trace: &mut RunTrace) {
        let mut size = 0;
        for (bucket, learner) in self.subs {
            let TraceParts { events, phases, snapshots, flags, partition_size } = learner.into_parts();
            trace.events.extend(events);
            trace.phases.extend(phases.into_iter().map(|mut p| {
                p.bucket = Some(bucket);
                p
            }));
            trace.snapshots.extend(snapshots);
            trace.flags.extend(flags);
            size += partition_size;
        }
        trace.events.sort_by_key(|e| e.step());
        if !self.low_mass.is_empty() {
            trace.flags.push(TraceFlag::LowMassContexts { contexts: self.low_mass });
        }
        trace.partition_size = Some(size);
    }
}

/// Runs the general-context wrapper for exactly `horizon` steps.
pub fn run_regret_general(env: &mut EnvHandle, cfg: &RegretConfig, horizon: u64, seed: u64) -> Result<RunTrace> {
    cfg.validate()?;
    if horizon == 0 {
        return Err(Error::Validation("horizon T must be positive".into()));
    }
    let learner = GeneralRegretLearner::new(env.contexts(), env.actions(), horizon, cfg.clone(), seed);
    run_traced(env, learner, Some(horizon))
}
