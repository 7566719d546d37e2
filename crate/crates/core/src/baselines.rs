//! Reference learners: naive per-pair PAC sampling, per-context UCB1 and
//! exponential weights over arms shared by all contexts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvHandle, Policy};
use crate::error::{Error, Result};
use crate::learner::{drive, steps_from, Learner};
use crate::pac::{CandidateSet, PacConfig, PacResult, Stage, StepBreakdown};
use crate::regret::{run_traced, RunTrace, TraceFlag, Traced};

/// Tunables of the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// UCB index `mean + sqrt(c ln t / n)`; textbook UCB1 uses `c = 2`.
    #[serde(default = "default_bonus")]
    pub ucb_bonus: f64,
    /// EXP3 learning rate; defaults to `sqrt(ln K / (T K))`.
    #[serde(default)]
    pub exp3_rate: Option<f64>,
}

fn default_bonus() -> f64 {
    2.0
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { ucb_bonus: default_bonus(), exp3_rate: None }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ucb_bonus > 0.0 && self.ucb_bonus.is_finite()) {
            return Err(Error::Validation(format!("UCB bonus must be positive, got {}", self.ucb_bonus)));
        }
        if let Some(eta) = self.exp3_rate {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Validation(format!("EXP3 rate must be positive, got {eta}")));
            }
        }
        Ok(())
    }
}

/// Samples per pair, `ceil((2/eps^2) ln(2SK/delta))`.
pub fn naive_pair_budget(contexts: usize, actions: usize, eps: f64, delta: f64) -> u64 {
    steps_from(2.0 / (eps * eps) * (2.0 * contexts as f64 * actions as f64 / delta).ln())
}

/// Per-pair sampling with least-pulled routing.
#[derive(Debug, Clone)]
pub struct NaivePac {
    actions: usize,
    per_pair: u64,
    pulls: Vec<u64>,
    sums: Vec<f64>,
    open: usize,
    breakdown: StepBreakdown,
    cap: Option<u64>,
}

impl NaivePac {
    pub fn new(contexts: usize, actions: usize, per_pair: u64, cap: Option<u64>) -> Self {
        let open = if per_pair == 0 { 0 } else { contexts * actions };
        Self {
            actions,
            per_pair,
            pulls: vec![0; contexts * actions],
            sums: vec![0.0; contexts * actions],
            open,
            breakdown: StepBreakdown::default(),
            cap,
        }
    }

    pub fn per_pair(&self) -> u64 {
        self.per_pair
    }

    fn row(&self, context: usize) -> std::ops::Range<usize> {
        context * self.actions..(context + 1) * self.actions
    }

    fn empirical_best(&self, context: usize) -> usize {
        let mut best: Option<(f64, usize)> = None;
        for (j, idx) in self.row(context).enumerate() {
            if self.pulls[idx] == 0 {
                continue;
            }
            let m = self.sums[idx] / self.pulls[idx] as f64;
            if best.is_none_or(|(b, _)| m > b) {
                best = Some((m, j));
            }
        }
        best.map_or(0, |(_, j)| j)
    }

    pub fn into_result(self, scale: f64) -> PacResult {
        let contexts = self.pulls.len() / self.actions;
        let policy = Policy::new((0..contexts).map(|i| self.empirical_best(i)).collect(), self.actions)
            .expect("arms in range");
        PacResult {
            policy,
            steps: self.breakdown.total(),
            breakdown: self.breakdown,
            candidates: CandidateSet::default(),
            completed: self.open == 0,
            scale,
            screening: Vec::new(),
            buckets: Vec::new(),
        }
    }
}

impl Learner for NaivePac {
    fn act(&mut self, context: usize) -> usize {
        let row = &self.pulls[self.row(context)];
        let (j, &n) = row.iter().enumerate().min_by_key(|&(j, &n)| (n, j)).expect("at least one arm");
        if n >= self.per_pair {
            self.breakdown.charge(Stage::Idle);
            self.empirical_best(context)
        } else {
            self.breakdown.charge(Stage::Collect);
            j
        }
    }

    fn observe(&mut self, context: usize, arm: usize, reward: f64) {
        let idx = context * self.actions + arm;
        if self.pulls[idx] < self.per_pair {
            self.pulls[idx] += 1;
            self.sums[idx] += reward;
            if self.pulls[idx] == self.per_pair {
                self.open -= 1;
            }
        }
    }

    fn is_done(&self) -> bool {
        self.open == 0 || self.cap.is_some_and(|c| self.breakdown.total() >= c)
    }
}

/// Samples every pair `ceil((2/eps^2) ln(2SK/delta))` times (times
/// `cfg.scale`) and returns the per-context empirical argmax.
///
/// A context with zero mass never completes, so such instances need a step
/// cap.
pub fn pac_naive(env: &mut EnvHandle, cfg: &PacConfig) -> Result<PacResult> {
    cfg.validate()?;
    if cfg.step_cap.is_none() && env.instance().nu().contains(&0.0) {
        return Err(Error::Validation("naive PAC on a zero-mass context needs a step cap".into()));
    }
    let per_pair = steps_from(cfg.scale * naive_pair_budget(env.contexts(), env.actions(), cfg.eps, cfg.delta) as f64);
    let mut learner = NaivePac::new(env.contexts(), env.actions(), per_pair, cfg.step_cap);
    drive(env, &mut learner, None)?;
    Ok(learner.into_result(cfg.scale))
}

/// Independent UCB1 per context.
#[derive(Debug, Clone)]
pub struct UcbPerContext {
    actions: usize,
    bonus: f64,
    pulls: Vec<u64>,
    sums: Vec<f64>,
    visits: Vec<u64>,
}

impl UcbPerContext {
    pub fn new(contexts: usize, actions: usize, bonus: f64) -> Self {
        Self {
            actions,
            bonus,
            pulls: vec![0; contexts * actions],
            sums: vec![0.0; contexts * actions],
            visits: vec![0; contexts],
        }
    }
}

impl Learner for UcbPerContext {
    fn act(&mut self, context: usize) -> usize {
        let base = context * self.actions;
        let row = &self.pulls[base..base + self.actions];
        if let Some(j) = row.iter().position(|&n| n == 0) {
            return j;
        }
        let log_t = (self.visits[context] as f64).ln();
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, &n) in row.iter().enumerate() {
            let index = self.sums[base + j] / n as f64 + (self.bonus * log_t / n as f64).sqrt();
            if index > best.0 {
                best = (index, j);
            }
        }
        best.1
    }

    fn observe(&mut self, context: usize, arm: usize, reward: f64) {
        let idx = context * self.actions + arm;
        self.pulls[idx] += 1;
        self.sums[idx] += reward;
        self.visits[context] += 1;
    }
}

impl Traced for UcbPerContext {
    fn algorithm(&self) -> &str {
        "ucb"
    }

    fn fill(self, _trace: &mut RunTrace) {}
}

pub fn regret_ucb_per_context(env: &mut EnvHandle, cfg: &BaselineConfig, horizon: u64) -> Result<RunTrace> {
    cfg.validate()?;
    if horizon == 0 {
        return Err(Error::Validation("horizon T must be positive".into()));
    }
    let learner = UcbPerContext::new(env.contexts(), env.actions(), cfg.ucb_bonus);
    run_traced(env, learner, Some(horizon))
}

/// Exponential weights over arms, shared by all contexts (EXP4 with the `K`
/// constant experts).
#[derive(Debug, Clone)]
pub struct Exp3 {
    eta: f64,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    rng: ChaCha8Rng,
    clipped: u64,
}

impl Exp3 {
    pub fn new(actions: usize, eta: f64, seed: u64) -> Self {
        Self {
            eta,
            log_weights: vec![0.0; actions],
            probs: vec![1.0 / actions as f64; actions],
            rng: ChaCha8Rng::seed_from_u64(seed),
            clipped: 0,
        }
    }

    /// `sqrt(ln K / (T K))`.
    pub fn default_rate(actions: usize, horizon: u64) -> f64 {
        ((actions as f64).ln() / (horizon as f64 * actions as f64)).sqrt()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn clipped(&self) -> u64 {
        self.clipped
    }

    fn renormalize(&mut self) {
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (p, &lw) in self.probs.iter_mut().zip(&self.log_weights) {
            *p = (lw - top).exp();
            total += *p;
        }
        self.probs.iter_mut().for_each(|p| *p /= total);
        // Keep log-weights bounded.
        self.log_weights.iter_mut().for_each(|lw| *lw -= top);
    }
}

impl Learner for Exp3 {
    fn act(&mut self, _context: usize) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (j, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        self.probs.len() - 1
    }

    fn observe(&mut self, _context: usize, arm: usize, reward: f64) {
        let r = if (0.0..=1.0).contains(&reward) {
            reward
        } else {
            self.clipped += 1;
            reward.clamp(0.0, 1.0)
        };
        let loss = (1.0 - r) / self.probs[arm];
        self.log_weights[arm] -= self.eta * loss;
        self.renormalize();
    }
}

impl Traced for Exp3 {
    fn algorithm(&self) -> &str {
        "exp3"
    }

    fn fill(self, trace: &mut RunTrace) {
        if self.clipped > 0 {
            trace.flags.push(TraceFlag::RewardClipped { count: self.clipped });
        }
    }
}

pub fn exp3_constant_experts(env: &mut EnvHandle, cfg: &BaselineConfig, horizon: u64, seed: u64) -> Result<RunTrace> {
    cfg.validate()?;
    if horizon == 0 {
        return Err(Error::Validation("horizon T must be positive".into()));
    }
    let eta = cfg.exp3_rate.unwrap_or_else(|| Exp3::default_rate(env.actions(), horizon));
    run_traced(env, Exp3::new(env.actions(), eta, seed), Some(horizon))
}
