//! PAC learner for almost-uniform context distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CandidateSet, PacConfig, PacResult, Provenance, RestrictedSolver, ScreeningRecord, Stage, StepBreakdown};
use crate::collect::{Collector, ExploreSets, PairMap};
use crate::env::{EnvHandle, Policy};
use crate::error::Result;
use crate::learner::{drive, steps_from, Learner};

/// Budgets and constants of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBudgets {
    /// `16 ln(rSK/delta)`.
    pub iota: f64,
    /// Number of accuracy levels `ceil(log2(1/eps^2))`.
    pub levels: u32,
    /// Arrivals per collection level, `r(S+K) iota / eps^2`.
    pub collect: u64,
    contexts: usize,
    scale: f64,
}

impl UniformBudgets {
    pub fn new(contexts: usize, actions: usize, cfg: &PacConfig) -> Self {
        let (s, k, r) = (contexts as f64, actions as f64, cfg.blocks as f64);
        let iota = 16.0 * (r * s * k / cfg.delta).ln();
        let levels = ((-2.0 * cfg.eps.log2()).ceil() as u32).max(1);
        let collect = steps_from(cfg.scale * r * (s + k) * iota / (cfg.eps * cfg.eps));
        Self { iota, levels, collect, contexts, scale: cfg.scale }
    }

    /// Arrivals of one screening probe at level `n`: `8 iota 2^n S`.
    pub fn probe(&self, level: u32) -> u64 {
        steps_from(self.scale * 8.0 * self.iota * 2f64.powi(level as i32) * self.contexts as f64)
    }

    /// Screening threshold at level `n`: `sqrt(iota / 2^n)`.
    pub fn threshold(&self, level: u32) -> f64 {
        (self.iota / 2f64.powi(level as i32)).sqrt()
    }
}

#[derive(Debug)]
enum Phase {
    Collect { level: u32, collector: Collector },
    Probe { level: u32, pick: (usize, usize, f64), collector: Collector },
    Solve(RestrictedSolver),
    Done(Policy),
}

/// Step-driven form of the almost-uniform learner over `contexts` local
/// contexts.
#[derive(Debug)]
pub struct PacUniformLearner {
    contexts: usize,
    actions: usize,
    cfg: PacConfig,
    budgets: UniformBudgets,
    rng: ChaCha8Rng,
    phase: Phase,
    datasets: Vec<PairMap>,
    screen_level: u32,
    candidates: CandidateSet,
    screening: Vec<ScreeningRecord>,
    breakdown: StepBreakdown,
}

impl PacUniformLearner {
    pub fn new(contexts: usize, actions: usize, cfg: PacConfig, mut rng: ChaCha8Rng) -> Self {
        let budgets = UniformBudgets::new(contexts, actions, &cfg);
        let collector = Collector::new(budgets.collect, 1, ExploreSets::full(contexts, actions), cfg.averaging, &mut rng);
        let mut learner = Self {
            contexts,
            actions,
            cfg,
            budgets,
            rng,
            phase: Phase::Collect { level: 1, collector },
            datasets: Vec::new(),
            screen_level: 1,
            candidates: CandidateSet::default(),
            screening: Vec::new(),
            breakdown: StepBreakdown::default(),
        };
        learner.advance();
        learner
    }

    pub fn budgets(&self) -> &UniformBudgets {
        &self.budgets
    }

    pub fn breakdown(&self) -> &StepBreakdown {
        &self.breakdown
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    /// Stage the next arrival will be charged to.
    pub fn stage(&self) -> Stage {
        match self.phase {
            Phase::Collect { .. } => Stage::Collect,
            Phase::Probe { .. } => Stage::Screen,
            Phase::Solve(_) => Stage::Solve,
            Phase::Done(_) => Stage::Idle,
        }
    }

    pub fn finished(&self) -> bool {
        matches!(self.phase, Phase::Done(_))
    }

    fn capped(&self) -> bool {
        self.cfg.step_cap.is_some_and(|cap| self.breakdown.total() >= cap)
    }

    /// Moves past every stage whose budget is already spent.
    fn advance(&mut self) {
        loop {
            let phase = std::mem::replace(&mut self.phase, Phase::Done(Policy::constant(0, 0)));
            self.phase = match phase {
                Phase::Collect { level, collector } if collector.is_done() => {
                    self.datasets.push(collector.finish().estimates);
                    if level < self.budgets.levels {
                        let explore = ExploreSets::full(self.contexts, self.actions);
                        let next = level + 1;
                        let collector = Collector::new(self.budgets.collect, next, explore, self.cfg.averaging, &mut self.rng);
                        Phase::Collect { level: next, collector }
                    } else {
                        self.next_probe()
                    }
                }
                Phase::Probe { level, pick, collector } if collector.is_done() => {
                    self.shrink(level, pick, collector.finish().estimates);
                    self.next_probe()
                }
                Phase::Solve(solver) if solver.is_done() => Phase::Done(solver.policy(self.actions)),
                other => {
                    self.phase = other;
                    return;
                }
            };
        }
    }

    /// Picks the largest remaining estimate (ties to the smaller context,
    /// then arm) at the lowest level with data, or starts the solve.
    fn next_probe(&mut self) -> Phase {
        while self.screen_level <= self.budgets.levels {
            let level = self.screen_level;
            let data = &self.datasets[level as usize - 1];
            let mut best: Option<(usize, usize, f64)> = None;
            for (&(i, j), est) in data {
                if best.is_none_or(|(_, _, m)| est.mean > m) {
                    best = Some((i, j, est.mean));
                }
            }
            if let Some(pick) = best {
                self.candidates.insert(Provenance { level, context: pick.0, arm: pick.1 });
                let explore = ExploreSets::singleton(self.contexts, pick.1);
                let collector =
                    Collector::new(self.budgets.probe(level), level, explore, self.cfg.averaging, &mut self.rng);
                return Phase::Probe { level, pick, collector };
            }
            self.screen_level += 1;
        }
        let arms = if self.candidates.is_empty() { vec![0] } else { self.candidates.arms() };
        let budget = RestrictedSolver::budget_for(
            self.contexts,
            self.actions,
            arms.len(),
            self.cfg.eps,
            self.cfg.delta,
            self.cfg.scale,
        );
        Phase::Solve(RestrictedSolver::new(self.contexts, arms, budget))
    }

    /// Drops every context whose probe lands within the level threshold of
    /// the picked estimate. A context without a probe estimate is kept. The
    /// picked pair is always dropped so that screening terminates.
    fn shrink(&mut self, level: u32, pick: (usize, usize, f64), probe: PairMap) {
        let (ci, cj, value) = pick;
        let threshold = self.budgets.threshold(level);
        let cleared: Vec<usize> = (0..self.contexts)
            .filter(|&i| probe.get(&(i, cj)).is_some_and(|e| (e.mean - value).abs() < threshold))
            .collect();
        let data = &mut self.datasets[level as usize - 1];
        data.retain(|&(i, _), _| cleared.binary_search(&i).is_err());
        data.remove(&(ci, cj));
        self.screening.push(ScreeningRecord {
            level,
            context: ci,
            arm: cj,
            estimate: value,
            cleared,
            remaining: data.len(),
        });
    }

    /// Final or, if the run was cut short, best-effort result.
    pub fn into_result(self) -> PacResult {
        let completed = self.finished();
        let policy = match self.phase {
            Phase::Done(policy) => policy,
            Phase::Solve(solver) => solver.policy(self.actions),
            _ => {
                let arm = self.candidates.arms().first().copied().unwrap_or(0);
                Policy::constant(self.contexts, arm)
            }
        };
        PacResult {
            policy,
            steps: self.breakdown.total(),
            breakdown: self.breakdown,
            candidates: self.candidates,
            completed,
            scale: self.cfg.scale,
            screening: self.screening,
            buckets: Vec::new(),
        }
    }
}

impl Learner for PacUniformLearner {
    fn act(&mut self, context: usize) -> usize {
        self.breakdown.charge(self.stage());
        match &mut self.phase {
            Phase::Collect { collector, .. } | Phase::Probe { collector, .. } => collector.arm(context),
            Phase::Solve(solver) => solver.act(context),
            Phase::Done(policy) => policy.actions().get(context).copied().unwrap_or(0),
        }
    }

    fn observe(&mut self, context: usize, arm: usize, reward: f64) {
        match &mut self.phase {
            Phase::Collect { collector, .. } | Phase::Probe { collector, .. } => {
                collector.record(context, reward, &mut self.rng)
            }
            Phase::Solve(solver) => solver.observe(context, arm, reward),
            Phase::Done(_) => return,
        }
        self.advance();
    }

    fn is_done(&self) -> bool {
        self.finished() || self.capped()
    }
}

/// Runs the almost-uniform learner to completion (or to the step cap).
pub fn pac_uniform(env: &mut EnvHandle, cfg: &PacConfig, seed: u64) -> Result<PacResult> {
    cfg.validate()?;
    let mut learner = PacUniformLearner::new(env.contexts(), env.actions(), cfg.clone(), ChaCha8Rng::seed_from_u64(seed));
    drive(env, &mut learner, None)?;
    Ok(learner.into_result())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::env::{exact_policy_gap, BanditInstance, NoiseKind};

    fn two_block_instance() -> BanditInstance {
        BanditInstance::from_means(
            vec![vec![0.9, 0.1], vec![0.9, 0.1], vec![0.1, 0.9], vec![0.1, 0.9]],
            vec![0.25; 4],
            NoiseKind::GaussianUnit,
        )
        .unwrap()
    }

    #[test]
    fn budgets_match_formulas() {
        let cfg = PacConfig::new(0.25, 0.1, 2);
        let b = UniformBudgets::new(4, 2, &cfg);
        let iota = 16.0 * 160f64.ln();
        assert!((b.iota - iota).abs() < 1e-12);
        assert_eq!(b.levels, 4);
        assert_eq!(b.collect, (2.0 * 6.0 * iota / 0.0625f64).ceil() as u64);
        assert_eq!(b.probe(3), (8.0 * iota * 8.0 * 4.0f64).ceil() as u64);
    }

    #[test]
    fn zero_noise_two_blocks_is_exact() {
        let inst = Arc::new(two_block_instance());
        let mut env = EnvHandle::new(inst.clone(), 11).zero_noise();
        // Thresholds only separate the blocks (gap 0.8) once 2^n > iota / 0.64.
        let cfg = PacConfig::new(0.05, 0.1, 2).with_scale(0.01);
        let result = pac_uniform(&mut env, &cfg, 5).unwrap();
        assert!(result.completed);
        assert_eq!(exact_policy_gap(&inst, &result.policy), 0.0);
        assert_eq!(result.candidates.arms(), vec![0, 1]);
        assert_eq!(result.steps, env.step());
        assert_eq!(result.breakdown.total(), result.steps);
        // Every screening pass clears the whole block of the picked context,
        // and only that block once the threshold is below the block gap.
        let b = UniformBudgets::new(4, 2, &cfg);
        for rec in &result.screening {
            let block: Vec<usize> = if rec.context < 2 { vec![0, 1] } else { vec![2, 3] };
            assert!(block.iter().all(|i| rec.cleared.contains(i)));
            if b.threshold(rec.level) < 0.8 {
                assert_eq!(rec.cleared, block);
            }
        }
        assert!(result.candidates.len() <= 2 * UniformBudgets::new(4, 2, &cfg).levels as usize);
    }

    #[test]
    fn single_arm_returns_that_arm() {
        let inst = Arc::new(BanditInstance::from_means(vec![vec![0.3]; 3], vec![1.0 / 3.0; 3], NoiseKind::GaussianUnit).unwrap());
        let mut env = EnvHandle::new(inst, 1);
        let result = pac_uniform(&mut env, &PacConfig::new(0.5, 0.1, 1).with_scale(0.01), 2).unwrap();
        assert_eq!(result.policy.actions(), &[0, 0, 0]);
    }

    #[test]
    fn step_cap_flags_partial_result() {
        let inst = Arc::new(two_block_instance());
        let mut env = EnvHandle::new(inst, 1);
        let mut cfg = PacConfig::new(0.25, 0.1, 2);
        cfg.step_cap = Some(100);
        let result = pac_uniform(&mut env, &cfg, 2).unwrap();
        assert!(!result.completed);
        assert_eq!(result.steps, 100);
        assert_eq!(env.step(), 100);
    }

    #[test]
    fn deterministic_given_seeds() {
        let inst = Arc::new(two_block_instance());
        let cfg = PacConfig::new(0.5, 0.1, 2).with_scale(0.02);
        let a = pac_uniform(&mut EnvHandle::new(inst.clone(), 4), &cfg, 9).unwrap();
        let b = pac_uniform(&mut EnvHandle::new(inst, 4), &cfg, 9).unwrap();
        assert_eq!(a, b);
    }
}
