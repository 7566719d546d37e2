//! PAC learner for arbitrary context distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    uniform_sample_bound, BucketReport, CandidateSet, PacConfig, PacResult, PacUniformLearner, Provenance,
    ScreeningRecord, Stage, StepBreakdown,
};
use crate::collect::ContextCounter;
use crate::env::{EnvHandle, Policy};
use crate::error::Result;
use crate::learner::{drive, steps_from, Learner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralBudgets {
    /// Arrivals used to estimate the context distribution, `(4S/eps) ln(S/delta)`.
    pub estimate: u64,
    /// Number of mass buckets `ceil(log2(S/eps))`; bucket `L` is the tail.
    pub buckets: u32,
    /// Environment steps per bucket sub-run.
    pub per_bucket: u64,
}

impl GeneralBudgets {
    pub fn new(contexts: usize, actions: usize, cfg: &PacConfig) -> Self {
        let s = contexts as f64;
        let estimate = steps_from(cfg.scale * 4.0 * s / cfg.eps * (s / cfg.delta).ln()).max(1);
        let buckets = ((s / cfg.eps).log2().ceil() as u32).max(1);
        let per_bucket = steps_from(cfg.scale * uniform_sample_bound(contexts, actions, cfg.blocks, cfg.eps, cfg.delta));
        Self { estimate, buckets, per_bucket }
    }
}

/// Bucket `l` with `freq` in `(2^{-l-1}, 2^{-l}]` for `l < buckets`, else
/// the tail bucket `buckets`.
pub fn bucket_of(freq: f64, buckets: u32) -> u32 {
    let mut l = 0;
    let mut upper = 1.0f64;
    while l < buckets {
        if freq > upper / 2.0 && freq <= upper {
            return l;
        }
        upper /= 2.0;
        l += 1;
    }
    buckets
}

#[derive(Debug)]
struct SubRun {
    bucket: u32,
    members: Vec<usize>,
    learner: PacUniformLearner,
    steps: u64,
}

#[derive(Debug)]
enum Phase {
    Estimate(ContextCounter),
    Buckets(SubRun),
    Done,
}

/// Step-driven form of the general learner.
#[derive(Debug)]
pub struct PacGeneralLearner {
    contexts: usize,
    actions: usize,
    cfg: PacConfig,
    budgets: GeneralBudgets,
    rng: ChaCha8Rng,
    phase: Phase,
    /// Remaining nonempty buckets, in increasing order, with their members.
    queue: std::collections::VecDeque<(u32, Vec<usize>)>,
    local: Vec<Option<usize>>,
    policy: Vec<usize>,
    breakdown: StepBreakdown,
    candidates: CandidateSet,
    screening: Vec<ScreeningRecord>,
    reports: Vec<BucketReport>,
    frequencies: Vec<f64>,
}

impl PacGeneralLearner {
    pub fn new(contexts: usize, actions: usize, cfg: PacConfig, rng: ChaCha8Rng) -> Self {
        let budgets = GeneralBudgets::new(contexts, actions, &cfg);
        Self {
            contexts,
            actions,
            phase: Phase::Estimate(ContextCounter::new(contexts, budgets.estimate, 0)),
            cfg,
            budgets,
            rng,
            queue: Default::default(),
            local: vec![None; contexts],
            policy: vec![0; contexts],
            breakdown: StepBreakdown::default(),
            candidates: CandidateSet::default(),
            screening: Vec::new(),
            reports: Vec::new(),
            frequencies: Vec::new(),
        }
    }

    pub fn budgets(&self) -> &GeneralBudgets {
        &self.budgets
    }

    /// Estimated context frequencies (empty until estimation ends).
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    fn total_steps(&self) -> u64 {
        let running = match &self.phase {
            Phase::Buckets(sub) => sub.learner.breakdown().total(),
            _ => 0,
        };
        self.breakdown.total() + running
    }

    fn advance(&mut self) {
        loop {
            match &self.phase {
                Phase::Estimate(counter) if counter.is_done() => {
                    let Phase::Estimate(counter) = std::mem::replace(&mut self.phase, Phase::Done) else {
                        unreachable!()
                    };
                    self.frequencies = counter.finish().frequencies;
                    let mut members = vec![Vec::new(); self.budgets.buckets as usize];
                    for (i, &f) in self.frequencies.iter().enumerate() {
                        let l = bucket_of(f, self.budgets.buckets);
                        if l < self.budgets.buckets {
                            members[l as usize].push(i);
                        }
                    }
                    self.queue = members
                        .into_iter()
                        .enumerate()
                        .filter(|(_, m)| !m.is_empty())
                        .map(|(l, m)| (l as u32, m))
                        .collect();
                    self.start_next();
                }
                Phase::Buckets(sub) if sub.learner.is_done() || sub.steps >= self.budgets.per_bucket => {
                    let Phase::Buckets(sub) = std::mem::replace(&mut self.phase, Phase::Done) else {
                        unreachable!()
                    };
                    self.close(sub);
                    self.start_next();
                }
                _ => return,
            }
        }
    }

    fn start_next(&mut self) {
        self.phase = match self.queue.pop_front() {
            Some((bucket, members)) => {
                for (k, &i) in members.iter().enumerate() {
                    self.local[i] = Some(k);
                }
                let mut sub_cfg = self.cfg.clone();
                sub_cfg.step_cap = None;
                let rng = ChaCha8Rng::seed_from_u64(self.rng.random());
                let learner = PacUniformLearner::new(members.len(), self.actions, sub_cfg, rng);
                Phase::Buckets(SubRun { bucket, members, learner, steps: 0 })
            }
            None => Phase::Done,
        };
    }

    fn close(&mut self, sub: SubRun) {
        for &i in &sub.members {
            self.local[i] = None;
        }
        let result = sub.learner.into_result();
        for (k, &i) in sub.members.iter().enumerate() {
            self.policy[i] = result.policy.action(k);
        }
        for p in result.candidates.provenance() {
            self.candidates.insert(Provenance { context: sub.members[p.context], ..*p });
        }
        for mut rec in result.screening {
            rec.context = sub.members[rec.context];
            rec.cleared.iter_mut().for_each(|i| *i = sub.members[*i]);
            self.screening.push(rec);
        }
        self.breakdown.add(&result.breakdown);
        self.reports.push(BucketReport {
            bucket: sub.bucket,
            contexts: sub.members,
            steps: sub.steps,
            finished: result.completed,
        });
    }

    pub fn into_result(mut self) -> PacResult {
        let completed = matches!(self.phase, Phase::Done);
        if let Phase::Buckets(sub) = std::mem::replace(&mut self.phase, Phase::Done) {
            self.close(sub);
        }
        let policy = Policy::new(self.policy, self.actions).expect("arms in range");
        debug_assert_eq!(policy.len(), self.contexts);
        PacResult {
            policy,
            steps: self.breakdown.total(),
            breakdown: self.breakdown,
            candidates: self.candidates,
            completed,
            scale: self.cfg.scale,
            screening: self.screening,
            buckets: self.reports,
        }
    }
}

impl Learner for PacGeneralLearner {
    fn act(&mut self, context: usize) -> usize {
        match &mut self.phase {
            Phase::Estimate(counter) => {
                self.breakdown.charge(Stage::Estimate);
                counter.arm()
            }
            Phase::Buckets(sub) => match self.local[context] {
                Some(k) => sub.learner.act(k),
                None => {
                    self.breakdown.charge(Stage::Idle);
                    0
                }
            },
            Phase::Done => {
                self.breakdown.charge(Stage::Idle);
                self.policy[context]
            }
        }
    }

    fn observe(&mut self, context: usize, arm: usize, reward: f64) {
        match &mut self.phase {
            Phase::Estimate(counter) => counter.record(context),
            Phase::Buckets(sub) => {
                sub.steps += 1;
                if let Some(k) = self.local[context] {
                    sub.learner.observe(k, arm, reward);
                }
            }
            Phase::Done => return,
        }
        self.advance();
    }

    fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Done) || self.cfg.step_cap.is_some_and(|cap| self.total_steps() >= cap)
    }
}

/// Runs the general learner to completion (or to the step cap).
pub fn pac_general(env: &mut EnvHandle, cfg: &PacConfig, seed: u64) -> Result<PacResult> {
    cfg.validate()?;
    let mut learner = PacGeneralLearner::new(env.contexts(), env.actions(), cfg.clone(), ChaCha8Rng::seed_from_u64(seed));
    drive(env, &mut learner, None)?;
    Ok(learner.into_result())
}
