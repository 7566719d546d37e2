//! The phased-elimination learners as one state machine.
//!
//! Both variants run phases `h = 1, 2, ...`: collect data restricted to each
//! cluster's GOOD arms, split clusters while some arm shows a large gap
//! inside a cluster, then eliminate arms per cluster. The uniform variant
//! collects once per phase at level `h`; the non-uniform variant collects at
//! every level `1..=h` and keeps a nested chain of GOOD sets per level.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::split::{partition_by_gaps, SplitParams};
use super::{PhaseSchedule, PhaseSnapshot, PhaseSummary, RegretConfig, RegretEvent, RunTrace, TraceFlag, Traced};
use crate::collect::{Collector, ExploreSets, PairMap};
use crate::learner::Learner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Uniform,
    NonUniform,
}

#[derive(Debug, Clone)]
struct Cluster {
    id: u64,
    members: Vec<usize>,
    /// GOOD set per level index.
    good: Vec<Vec<usize>>,
}

/// Dense per-level estimates; NaN marks a pair without data.
#[derive(Debug, Clone)]
struct Table {
    actions: usize,
    values: Vec<f64>,
}

impl Table {
    fn from_map(map: &PairMap, contexts: usize, actions: usize) -> Self {
        let mut values = vec![f64::NAN; contexts * actions];
        for (&(i, j), e) in map {
            values[i * actions + j] = e.mean;
        }
        Self { actions, values }
    }

    #[inline]
    fn get(&self, context: usize, arm: usize) -> Option<f64> {
        let v = self.values[context * self.actions + arm];
        (!v.is_nan()).then_some(v)
    }

    /// Largest estimate of `arm` over `members`.
    fn best(&self, members: &[usize], arm: usize) -> Option<f64> {
        members.iter().filter_map(|&i| self.get(i, arm)).reduce(f64::max)
    }
}

#[derive(Debug)]
enum Stage {
    Collect {
        index: u32,
        collector: Collector,
    },
    Split {
        cluster: usize,
        index: u32,
        arm: usize,
        witness: (usize, usize),
        params: SplitParams,
        collector: Collector,
    },
}

/// Learner-side trace material.
#[derive(Debug, Default)]
pub(crate) struct TraceParts {
    pub events: Vec<RegretEvent>,
    pub phases: Vec<PhaseSummary>,
    pub snapshots: Vec<PhaseSnapshot>,
    pub flags: Vec<TraceFlag>,
    pub partition_size: usize,
}

#[derive(Debug)]
pub struct PhasedLearner {
    variant: Variant,
    contexts: usize,
    actions: usize,
    cfg: RegretConfig,
    rng: ChaCha8Rng,
    /// Context ids reported in events (identity unless the learner serves a
    /// bucket of a larger problem).
    labels: Vec<usize>,
    clusters: Vec<Cluster>,
    cluster_of: Vec<usize>,
    next_id: u64,
    schedule: PhaseSchedule,
    tables: Vec<Table>,
    excluded: BTreeSet<u64>,
    stage: Option<Stage>,
    clock: u64,
    phase_start: u64,
    exceeded: bool,
    parts: TraceParts,
}

impl PhasedLearner {
    pub fn new(variant: Variant, contexts: usize, actions: usize, cfg: RegretConfig, seed: u64) -> Self {
        let schedule = PhaseSchedule::new(variant, 1, contexts, actions, &cfg);
        let mut learner = Self {
            variant,
            contexts,
            actions,
            rng: ChaCha8Rng::seed_from_u64(seed),
            labels: (0..contexts).collect(),
            clusters: vec![Cluster { id: 0, members: (0..contexts).collect(), good: vec![(0..actions).collect()] }],
            cluster_of: vec![0; contexts],
            next_id: 1,
            schedule,
            tables: Vec::new(),
            excluded: BTreeSet::new(),
            stage: None,
            clock: 0,
            phase_start: 0,
            exceeded: false,
            parts: TraceParts::default(),
            cfg,
        };
        learner.parts.events.push(RegretEvent::PhaseStart { step: 0, phase: 1 });
        learner.stage = Some(learner.start_collect(0));
        learner
    }

    /// Reports context `i` as `labels[i]` in events and snapshots.
    pub(crate) fn with_labels(mut self, labels: Vec<usize>) -> Self {
        assert_eq!(labels.len(), self.contexts);
        self.labels = labels;
        self
    }

    pub fn phase(&self) -> u32 {
        self.schedule.phase
    }

    pub fn schedule(&self) -> &PhaseSchedule {
        &self.schedule
    }

    /// Current clusters (local context ids, ascending within each).
    pub fn partition(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|c| c.members.clone()).collect()
    }

    /// Per-level GOOD sets of the cluster holding `context`.
    pub fn good(&self, context: usize) -> &[Vec<usize>] {
        &self.clusters[self.cluster_of[context]].good
    }

    fn level(&self, index: u32) -> u32 {
        match self.variant {
            Variant::Uniform => self.schedule.phase,
            Variant::NonUniform => index + 1,
        }
    }

    fn start_collect(&mut self, index: u32) -> Stage {
        let budget = match self.variant {
            Variant::Uniform => {
                self.schedule.uniform_budget(self.contexts, self.actions, self.cfg.blocks, self.cfg.budget_scale)
            }
            Variant::NonUniform => self.schedule.level_budget(
                index + 1,
                self.contexts,
                self.actions,
                self.cfg.blocks,
                self.cfg.budget_scale,
            ),
        };
        let sets = (0..self.contexts).map(|i| self.clusters[self.cluster_of[i]].good[index as usize].clone()).collect();
        let explore = ExploreSets::new(sets, self.actions).expect("GOOD sets are nonempty and in range");
        let collector = Collector::new(budget, self.level(index), explore, self.cfg.averaging, &mut self.rng);
        Stage::Collect { index, collector }
    }

    fn advance(&mut self) {
        loop {
            let done = match self.stage.as_ref().expect("stage is always set") {
                Stage::Collect { collector, .. } | Stage::Split { collector, .. } => collector.is_done(),
            };
            if !done {
                return;
            }
            let next = match self.stage.take().expect("stage is always set") {
                Stage::Collect { index, collector } => {
                    let table = Table::from_map(&collector.finish().estimates, self.contexts, self.actions);
                    self.tables.push(table);
                    if index + 1 < self.schedule.levels {
                        self.start_collect(index + 1)
                    } else {
                        self.detect()
                    }
                }
                Stage::Split { cluster, index, arm, witness, params, collector } => {
                    self.apply_split(cluster, index, arm, witness, &params, &collector.finish().estimates);
                    self.detect()
                }
            };
            self.stage = Some(next);
        }
    }

    /// Smallest `(cluster id, level, arm, high context, low context)` whose
    /// estimates differ by at least the level threshold.
    fn find_witness(&self) -> Option<(usize, u32, usize, usize, usize)> {
        for (ci, c) in self.clusters.iter().enumerate() {
            if c.members.len() < 2 || self.excluded.contains(&c.id) {
                continue;
            }
            for index in 0..self.schedule.levels {
                let table = &self.tables[index as usize];
                let thr = self.schedule.threshold(self.level(index));
                for arm in 0..self.actions {
                    let Some(low) = c.members.iter().filter_map(|&i| table.get(i, arm)).reduce(f64::min) else {
                        continue;
                    };
                    let hi = c.members.iter().find(|&&i| table.get(i, arm).is_some_and(|v| v - low >= thr));
                    if let Some(&hi) = hi {
                        let top = table.get(hi, arm).expect("present");
                        let lo = c
                            .members
                            .iter()
                            .find(|&&i| table.get(i, arm).is_some_and(|v| top - v >= thr))
                            .copied()
                            .expect("the minimum qualifies");
                        return Some((ci, index, arm, hi, lo));
                    }
                }
            }
        }
        None
    }

    fn detect(&mut self) -> Stage {
        if let Some((cluster, index, arm, hi, lo)) = self.find_witness() {
            let params = SplitParams::for_phase(&self.schedule, self.contexts, &self.cfg);
            let sets = (0..self.contexts)
                .map(|i| {
                    let c = self.cluster_of[i];
                    if c == cluster {
                        vec![arm]
                    } else {
                        self.clusters[c].good[index as usize].clone()
                    }
                })
                .collect();
            let explore = ExploreSets::new(sets, self.actions).expect("valid explore sets");
            let collector = Collector::new(params.budget, params.level, explore, params.averaging, &mut self.rng);
            return Stage::Split { cluster, index, arm, witness: (hi, lo), params, collector };
        }
        self.eliminate();
        self.next_phase();
        self.start_collect(0)
    }

    fn label_all(&self, members: &[usize]) -> Vec<usize> {
        members.iter().map(|&i| self.labels[i]).collect()
    }

    fn apply_split(
        &mut self,
        cluster: usize,
        index: u32,
        arm: usize,
        witness: (usize, usize),
        params: &SplitParams,
        estimates: &PairMap,
    ) {
        let members = self.clusters[cluster].members.clone();
        let values: Vec<(usize, Option<f64>)> =
            members.iter().map(|&i| (i, estimates.get(&(i, arm)).map(|e| e.mean))).collect();
        let outcome = partition_by_gaps(&values, params.threshold);
        let level = self.level(index);
        let phase = self.schedule.phase;
        if outcome.parts.len() < 2 {
            self.excluded.insert(self.clusters[cluster].id);
            let cluster = self.label_all(&members);
            self.parts.events.push(RegretEvent::SplitRejected { step: self.clock, phase, level, arm, cluster });
            return;
        }
        let parent = self.clusters.remove(cluster);
        for part in &outcome.parts {
            self.clusters.push(Cluster { id: self.next_id, members: part.clone(), good: parent.good.clone() });
            self.next_id += 1;
        }
        self.rebuild_index();
        let event = RegretEvent::Split {
            step: self.clock,
            phase,
            level,
            arm,
            witness: (self.labels[witness.0], self.labels[witness.1]),
            cluster: self.label_all(&members),
            parts: outcome.parts.iter().map(|p| self.label_all(p)).collect(),
            unlabeled: self.label_all(&outcome.unlabeled),
        };
        self.parts.events.push(event);
        if self.clusters.len() > self.cfg.blocks && !self.exceeded {
            self.exceeded = true;
            self.parts.flags.push(TraceFlag::PartitionExceedsBlocks {
                step: self.clock,
                phase,
                size: self.clusters.len(),
            });
        }
    }

    fn rebuild_index(&mut self) {
        for (ci, c) in self.clusters.iter().enumerate() {
            for &i in &c.members {
                self.cluster_of[i] = ci;
            }
        }
    }

    fn eliminate(&mut self) {
        let phase = self.schedule.phase;
        for ci in 0..self.clusters.len() {
            let members = self.clusters[ci].members.clone();
            let old = self.clusters[ci].good.clone();
            let new = match self.variant {
                Variant::Uniform => {
                    let thr = 2.0 * self.schedule.threshold(phase);
                    vec![survivors(&old[0], &self.tables[0], &members, thr)]
                }
                Variant::NonUniform => {
                    let mut chain: Vec<Vec<usize>> = vec![(0..self.actions).collect()];
                    for n in 2..=phase {
                        let k = (n - 1) as usize;
                        let table = &self.tables[k];
                        let kept = survivors(&old[k], table, &members, 2.0 * self.schedule.threshold(n));
                        let prev = &chain[k - 1];
                        let mut next: Vec<usize> = prev.iter().copied().filter(|j| kept.binary_search(j).is_ok()).collect();
                        if next.is_empty() {
                            next = vec![best_arm(prev, table, &members)];
                            self.parts.flags.push(TraceFlag::GoodRestored { step: self.clock, phase, level: n });
                        }
                        chain.push(next);
                    }
                    let last = chain.last().expect("nonempty").clone();
                    chain.push(last);
                    chain
                }
            };
            for (k, before) in old.iter().enumerate() {
                let removed: Vec<usize> = before.iter().copied().filter(|j| new[k].binary_search(j).is_err()).collect();
                if !removed.is_empty() {
                    self.parts.events.push(RegretEvent::Eliminate {
                        step: self.clock,
                        phase,
                        level: self.level(k as u32),
                        cluster: self.label_all(&members),
                        removed,
                    });
                }
            }
            debug_assert!(new.iter().all(|g| !g.is_empty()));
            debug_assert!(new.windows(2).all(|w| w[1].iter().all(|j| w[0].binary_search(j).is_ok())));
            self.clusters[ci].good = new;
        }
    }

    fn summary(&self, end_step: u64) -> PhaseSummary {
        PhaseSummary {
            phase: self.schedule.phase,
            start_step: self.phase_start,
            end_step,
            eps: self.schedule.eps,
            iota: self.schedule.iota,
            partition_size: self.clusters.len(),
            good_total: self.clusters.iter().map(|c| c.good.last().map_or(0, Vec::len)).sum(),
            bucket: None,
        }
    }

    fn next_phase(&mut self) {
        self.parts.phases.push(self.summary(self.clock));
        if self.cfg.snapshots {
            self.parts.snapshots.push(PhaseSnapshot {
                phase: self.schedule.phase,
                step: self.clock,
                clusters: self.clusters.iter().map(|c| self.label_all(&c.members)).collect(),
                good: self.clusters.iter().map(|c| c.good.clone()).collect(),
            });
        }
        let phase = self.schedule.phase + 1;
        self.schedule = PhaseSchedule::new(self.variant, phase, self.contexts, self.actions, &self.cfg);
        self.tables.clear();
        self.excluded.clear();
        self.exceeded = false;
        self.phase_start = self.clock;
        self.parts.events.push(RegretEvent::PhaseStart { step: self.clock, phase });
    }

    /// Records an arrival at global step `t`.
    pub(crate) fn observe_at(&mut self, t: u64, context: usize, reward: f64) {
        self.clock = t;
        match self.stage.as_mut().expect("stage is always set") {
            Stage::Collect { collector, .. } | Stage::Split { collector, .. } => {
                collector.record(context, reward, &mut self.rng)
            }
        }
        self.advance();
    }

    pub(crate) fn into_parts(mut self) -> TraceParts {
        let partial = self.summary(self.clock);
        self.parts.phases.push(partial);
        self.parts.partition_size = self.clusters.len();
        self.parts
    }
}

/// Arms of `good` whose best in-cluster estimate is within `thr` of the best
/// arm's. Arms without data are kept.
fn survivors(good: &[usize], table: &Table, members: &[usize], thr: f64) -> Vec<usize> {
    let mu: Vec<Option<f64>> = good.iter().map(|&j| table.best(members, j)).collect();
    let Some(top) = mu.iter().flatten().copied().reduce(f64::max) else {
        return good.to_vec();
    };
    good.iter().zip(&mu).filter(|(_, m)| m.is_none_or(|m| top - m <= thr)).map(|(&j, _)| j).collect()
}

/// Arm of `set` with the largest in-cluster estimate (ties and missing data
/// resolve to the smaller arm).
fn best_arm(set: &[usize], table: &Table, members: &[usize]) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for &j in set {
        if let Some(m) = table.best(members, j) {
            if best.is_none_or(|(b, _)| m > b) {
                best = Some((m, j));
            }
        }
    }
    best.map_or(set[0], |(_, j)| j)
}

impl Learner for PhasedLearner {
    fn act(&mut self, context: usize) -> usize {
        match self.stage.as_ref().expect("stage is always set") {
            Stage::Collect { collector, .. } | Stage::Split { collector, .. } => collector.arm(context),
        }
    }

    fn observe(&mut self, context: usize, _arm: usize, reward: f64) {
        self.observe_at(self.clock + 1, context, reward);
    }
}

impl Traced for PhasedLearner {
    fn algorithm(&self) -> &str {
        match self.variant {
            Variant::Uniform => "uniform",
            Variant::NonUniform => "nonuniform",
        }
    }

    fn fill(self, trace: &mut RunTrace) {
        let parts = self.into_parts();
        trace.events = parts.events;
        trace.phases = parts.phases;
        trace.snapshots = parts.snapshots;
        trace.flags = parts.flags;
        trace.partition_size = Some(parts.partition_size);
    }
}
