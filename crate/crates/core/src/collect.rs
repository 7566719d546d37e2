//! Randomized round-robin data collection and context-distribution estimation.
//!
//! Each context keeps a current arm drawn uniformly from its explore set.
//! Whenever the context's visit count within the collection reaches a
//! multiple of `2^n`, the pair `(i, arm)` is emitted with its empirical mean
//! and the arm is redrawn.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::EnvHandle;
use crate::error::{Error, Result};
use crate::learner::{drive, Learner};

/// How an emitted pair's estimate is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Mean of the `2^n` rewards of the epoch that just closed.
    #[default]
    FreshEpoch,
    /// Mean of every reward the pair has received in this collection, so an
    /// arm redrawn for the same context mixes its epochs.
    Cumulative,
}

/// Per-context nonempty arm subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploreSets {
    sets: Vec<Vec<usize>>,
}

impl ExploreSets {
    /// Validates the sets; each is sorted and deduplicated.
    pub fn new(mut sets: Vec<Vec<usize>>, actions: usize) -> Result<Self> {
        for (i, set) in sets.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::Validation(format!("explore set of context {i} is empty")));
            }
            if set.last().is_some_and(|&j| j >= actions) {
                return Err(Error::Validation(format!(
                    "explore set of context {i} has an arm out of range for {actions} actions"
                )));
            }
        }
        Ok(Self { sets })
    }

    /// Every context explores all arms.
    pub fn full(contexts: usize, actions: usize) -> Self {
        Self { sets: vec![(0..actions).collect(); contexts] }
    }

    /// Every context explores the single arm `arm`.
    pub fn singleton(contexts: usize, arm: usize) -> Self {
        Self { sets: vec![vec![arm]; contexts] }
    }

    pub fn get(&self, context: usize) -> &[usize] {
        &self.sets[context]
    }

    pub fn contexts(&self) -> usize {
        self.sets.len()
    }
}

/// Estimate of one context-arm pair and the number of rewards behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub mean: f64,
    pub count: u64,
}

/// A closed epoch: the context's visit count (within the collection) when the
/// pair was emitted, and the collection step at which it happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Emission {
    pub step: u64,
    pub context: usize,
    pub arm: usize,
    pub visits: u64,
}

pub type PairMap = BTreeMap<(usize, usize), PairEstimate>;

/// The pair set `D_n` with its estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectOutput {
    pub level: u32,
    pub steps: u64,
    #[serde(serialize_with = "ser_pairs", deserialize_with = "de_pairs")]
    pub estimates: PairMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emissions: Option<Vec<Emission>>,
}

#[derive(Serialize, Deserialize)]
struct PairRow {
    context: usize,
    arm: usize,
    mean: f64,
    count: u64,
}

fn ser_pairs<S: Serializer>(map: &PairMap, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(map.iter().map(|(&(context, arm), e)| PairRow {
        context,
        arm,
        mean: e.mean,
        count: e.count,
    }))
}

fn de_pairs<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<PairMap, D::Error> {
    let rows = Vec::<PairRow>::deserialize(d)?;
    Ok(rows
        .into_iter()
        .map(|r| ((r.context, r.arm), PairEstimate { mean: r.mean, count: r.count }))
        .collect())
}

impl CollectOutput {
    pub fn get(&self, context: usize, arm: usize) -> Option<f64> {
        self.estimates.get(&(context, arm)).map(|e| e.mean)
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }
}

/// Incremental data-collection engine for `budget` arrivals at level `n`.
#[derive(Debug, Clone)]
pub struct Collector {
    level: u32,
    epoch: u64,
    budget: u64,
    steps: u64,
    explore: ExploreSets,
    assigned: Vec<usize>,
    visits: Vec<u64>,
    epoch_sum: Vec<ShiftedSum>,
    averaging: Averaging,
    pair_totals: HashMap<(usize, usize), ShiftedSum>,
    estimates: PairMap,
    emissions: Option<Vec<Emission>>,
}

impl Collector {
    /// Draws the initial arm of every context.
    ///
    /// Panics if `level == 0`.
    pub fn new<R: Rng + ?Sized>(
        budget: u64,
        level: u32,
        explore: ExploreSets,
        averaging: Averaging,
        rng: &mut R,
    ) -> Self {
        assert!(level >= 1, "accuracy level must be at least 1");
        let contexts = explore.contexts();
        let assigned = (0..contexts).map(|i| draw(explore.get(i), rng)).collect();
        Self {
            level,
            epoch: 1u64 << level.min(62),
            budget,
            steps: 0,
            explore,
            assigned,
            visits: vec![0; contexts],
            epoch_sum: vec![ShiftedSum::default(); contexts],
            averaging,
            pair_totals: HashMap::new(),
            estimates: BTreeMap::new(),
            emissions: None,
        }
    }

    /// Keeps an [`Emission`] record per closed epoch.
    pub fn with_emission_log(mut self) -> Self {
        self.emissions = Some(Vec::new());
        self
    }

    /// Current arm of a context.
    #[inline]
    pub fn arm(&self, context: usize) -> usize {
        self.assigned[context]
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.budget
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn estimates(&self) -> &PairMap {
        &self.estimates
    }

    /// Records the reward of the current arm of `context`.
    pub fn record<R: Rng + ?Sized>(&mut self, context: usize, reward: f64, rng: &mut R) {
        let arm = self.assigned[context];
        self.steps += 1;
        self.visits[context] += 1;
        self.epoch_sum[context].push(reward);
        if self.averaging == Averaging::Cumulative {
            self.pair_totals.entry((context, arm)).or_default().push(reward);
        }
        if self.visits[context] % self.epoch == 0 {
            let estimate = match self.averaging {
                Averaging::FreshEpoch => PairEstimate {
                    mean: self.epoch_sum[context].mean(),
                    count: self.epoch,
                },
                Averaging::Cumulative => {
                    let total = self.pair_totals[&(context, arm)];
                    PairEstimate { mean: total.mean(), count: total.count }
                }
            };
            self.estimates.insert((context, arm), estimate);
            if let Some(log) = self.emissions.as_mut() {
                log.push(Emission { step: self.steps, context, arm, visits: self.visits[context] });
            }
            self.epoch_sum[context] = ShiftedSum::default();
            self.assigned[context] = draw(self.explore.get(context), rng);
        }
    }

    pub fn finish(self) -> CollectOutput {
        CollectOutput {
            level: self.level,
            steps: self.steps,
            estimates: self.estimates,
            emissions: self.emissions,
        }
    }
}

/// Running sum of deviations from the first value, so a constant stream
/// averages back to that constant exactly.
#[derive(Debug, Clone, Copy, Default)]
struct ShiftedSum {
    shift: f64,
    deviations: f64,
    count: u64,
}

impl ShiftedSum {
    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.shift = x;
        }
        self.deviations += x - self.shift;
        self.count += 1;
    }

    fn mean(&self) -> f64 {
        self.shift + self.deviations / self.count as f64
    }
}

fn draw<R: Rng + ?Sized>(set: &[usize], rng: &mut R) -> usize {
    if set.len() == 1 {
        set[0]
    } else {
        set[rng.random_range(0..set.len())]
    }
}

struct CollectRun<'a, R: Rng + ?Sized> {
    collector: Collector,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Learner for CollectRun<'_, R> {
    fn act(&mut self, context: usize) -> usize {
        self.collector.arm(context)
    }

    fn observe(&mut self, context: usize, _arm: usize, reward: f64) {
        self.collector.record(context, reward, self.rng);
    }

    fn is_done(&self) -> bool {
        self.collector.is_done()
    }
}

/// Runs exactly `budget` environment steps of data collection at level `n`.
pub fn collect<R: Rng + ?Sized>(
    env: &mut EnvHandle,
    rng: &mut R,
    budget: u64,
    level: u32,
    explore: &ExploreSets,
    averaging: Averaging,
) -> Result<CollectOutput> {
    if level == 0 {
        return Err(Error::Validation("accuracy level must be at least 1".into()));
    }
    if explore.contexts() != env.contexts() {
        return Err(Error::Config("explore sets must cover every context".into()));
    }
    let collector = Collector::new(budget, level, explore.clone(), averaging, rng).with_emission_log();
    let mut run = CollectRun { collector, rng };
    drive(env, &mut run, None)?;
    Ok(run.collector.finish())
}

/// Empirical context frequencies from `J` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEstimate {
    pub frequencies: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: u64,
}

impl ContextEstimate {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let samples: u64 = counts.iter().sum();
        let frequencies = if samples == 0 {
            vec![0.0; counts.len()]
        } else {
            counts.iter().map(|&c| c as f64 / samples as f64).collect()
        };
        Self { frequencies, counts, samples }
    }
}

/// Counts context arrivals while playing a fixed arm.
#[derive(Debug, Clone)]
pub struct ContextCounter {
    counts: Vec<u64>,
    budget: u64,
    seen: u64,
    arm: usize,
}

impl ContextCounter {
    pub fn new(contexts: usize, budget: u64, arm: usize) -> Self {
        Self { counts: vec![0; contexts], budget, seen: 0, arm }
    }

    pub fn arm(&self) -> usize {
        self.arm
    }

    pub fn record(&mut self, context: usize) {
        self.counts[context] += 1;
        self.seen += 1;
    }

    pub fn is_done(&self) -> bool {
        self.seen >= self.budget
    }

    pub fn finish(self) -> ContextEstimate {
        ContextEstimate::from_counts(self.counts)
    }
}

impl Learner for ContextCounter {
    fn act(&mut self, _context: usize) -> usize {
        self.arm
    }

    fn observe(&mut self, context: usize, _arm: usize, _reward: f64) {
        self.record(context);
    }

    fn is_done(&self) -> bool {
        ContextCounter::is_done(self)
    }
}

/// Estimates `nu` from `J` fresh arrivals, playing arm 0 on each.
pub fn estimate_context_distribution(env: &mut EnvHandle, samples: u64) -> Result<ContextEstimate> {
    if samples == 0 {
        return Err(Error::Validation("need at least one context sample".into()));
    }
    let mut counter = ContextCounter::new(env.contexts(), samples, 0);
    drive(env, &mut counter, None)?;
    Ok(counter.finish())
}
