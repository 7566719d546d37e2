use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::instance::{BanditInstance, NoiseKind};
use crate::error::{Error, Result};
use crate::seed::{stream_rng, streams};

enum ContextSampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

/// Cumulative pseudo-regret recorded when the step counter reached `step`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub regret: f64,
}

/// One logged interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub context: usize,
    pub arm: usize,
    pub reward: f64,
    pub regret: f64,
}

/// A live environment: the sequential interaction protocol over a shared,
/// immutable [`BanditInstance`].
///
/// Contexts and noise come from separate named streams of the seed, so a
/// fixed seed and a fixed arm script reproduce the whole trace bit for bit.
pub struct EnvHandle {
    instance: Arc<BanditInstance>,
    sampler: ContextSampler,
    context_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    step: u64,
    pending: Option<usize>,
    regret: f64,
    noise_scale: f64,
    checkpoints: Vec<u64>,
    next_checkpoint: usize,
    recorded: Vec<Checkpoint>,
    log: Option<Vec<StepRecord>>,
}

impl EnvHandle {
    pub fn new(instance: Arc<BanditInstance>, seed: u64) -> Self {
        let nu = instance.nu();
        let uniform = nu.iter().all(|&p| p == nu[0]);
        let sampler = if uniform {
            ContextSampler::Uniform(nu.len())
        } else {
            ContextSampler::Weighted(
                WeightedIndex::new(nu.iter().copied()).expect("validated probability vector"),
            )
        };
        Self {
            instance,
            sampler,
            context_rng: stream_rng(seed, streams::CONTEXTS),
            noise_rng: stream_rng(seed, streams::NOISE),
            step: 0,
            pending: None,
            regret: 0.0,
            noise_scale: 1.0,
            checkpoints: Vec::new(),
            next_checkpoint: 0,
            recorded: Vec::new(),
            log: None,
        }
    }

    /// Test hook: disables reward noise, so every pull returns `A(i,j)` exactly.
    pub fn zero_noise(mut self) -> Self {
        self.noise_scale = 0.0;
        self
    }

    /// Records cumulative pseudo-regret at each listed step (sorted, deduplicated).
    pub fn with_checkpoints(mut self, mut steps: Vec<u64>) -> Self {
        steps.sort_unstable();
        steps.dedup();
        steps.retain(|&s| s > 0);
        self.checkpoints = steps;
        self
    }

    /// Keeps a full per-step log (memory grows with the horizon).
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }

    pub fn shared_instance(&self) -> Arc<BanditInstance> {
        Arc::clone(&self.instance)
    }

    pub fn contexts(&self) -> usize {
        self.instance.contexts()
    }

    pub fn actions(&self) -> usize {
        self.instance.actions()
    }

    /// Number of completed pulls.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Cumulative pseudo-regret `sum_t max_j A(i_t,j) - A(i_t,j_t)`.
    pub fn regret(&self) -> f64 {
        self.regret
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.recorded
    }

    pub fn log(&self) -> Option<&[StepRecord]> {
        self.log.as_deref()
    }

    /// Draws the next context `i_t ~ nu`. Drawing again before pulling
    /// replaces the pending context.
    pub fn sample_context(&mut self) -> usize {
        let i = match &self.sampler {
            ContextSampler::Uniform(s) => self.context_rng.random_range(0..*s),
            ContextSampler::Weighted(w) => w.sample(&mut self.context_rng),
        };
        self.pending = Some(i);
        i
    }

    /// Plays `arm` on the pending context `context` and returns the reward.
    pub fn pull(&mut self, context: usize, arm: usize) -> Result<f64> {
        if context >= self.contexts() || arm >= self.actions() {
            return Err(Error::Usage(format!(
                "pull({context}, {arm}) out of range for S = {}, K = {}",
                self.contexts(),
                self.actions()
            )));
        }
        match self.pending {
            None => return Err(Error::Protocol("pull without a sampled context".into())),
            Some(p) if p != context => {
                return Err(Error::Protocol(format!(
                    "pulled on context {context} but the pending context is {p}"
                )))
            }
            Some(_) => {}
        }
        self.pending = None;
        let mean = self.instance.mean(context, arm);
        let reward = match self.instance.noise() {
            NoiseKind::GaussianUnit => {
                let z: f64 = self.noise_rng.sample(StandardNormal);
                mean + self.noise_scale * z
            }
            NoiseKind::Bernoulli => {
                let u: f64 = self.noise_rng.random();
                if self.noise_scale == 0.0 {
                    mean
                } else if u < mean {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let increment = self.instance.best_mean(context) - mean;
        self.regret += increment;
        self.step += 1;
        if let Some(log) = self.log.as_mut() {
            log.push(StepRecord { context, arm, reward, regret: increment });
        }
        while self.next_checkpoint < self.checkpoints.len()
            && self.checkpoints[self.next_checkpoint] == self.step
        {
            self.recorded.push(Checkpoint { step: self.step, regret: self.regret });
            self.next_checkpoint += 1;
        }
        Ok(reward)
    }
}
