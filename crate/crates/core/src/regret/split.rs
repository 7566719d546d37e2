//! Splitting a cluster of contexts along one arm's reward estimates.

use rand::Rng;

use super::{PhaseSchedule, RegretConfig};
use crate::collect::{collect, Averaging, ExploreSets};
use crate::env::EnvHandle;
use crate::error::{Error, Result};
use crate::learner::steps_from;

/// Constants of one split call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub eps: f64,
    pub delta: f64,
    /// `64 ln(S/delta')`, times the confidence scale.
    pub iota: f64,
    /// `S iota' / eps'^2`, times the budget scale.
    pub budget: u64,
    /// `ceil(log2(2/eps'^2))`, so that one epoch holds about `2/eps'^2` samples.
    pub level: u32,
    /// Cut threshold `sqrt(iota') eps'`.
    pub threshold: f64,
    pub averaging: Averaging,
}

impl SplitParams {
    pub fn new(eps: f64, delta: f64, contexts: usize, confidence_scale: f64, budget_scale: f64) -> Self {
        let s = contexts as f64;
        let iota = confidence_scale * 64.0 * (s / delta).ln();
        let budget = steps_from(budget_scale * s * iota / (eps * eps)).max(1);
        let level = ((2.0 / (eps * eps)).log2().ceil() as u32).max(1);
        Self { eps, delta, iota, budget, level, threshold: iota.sqrt() * eps, averaging: Averaging::FreshEpoch }
    }

    /// `eps' = eps_h / (4r)` and `delta' = delta_h / r` for phase `h`.
    pub fn for_phase(schedule: &PhaseSchedule, contexts: usize, cfg: &RegretConfig) -> Self {
        let r = cfg.blocks as f64;
        let mut p = Self::new(schedule.eps / (4.0 * r), schedule.delta / r, contexts, cfg.confidence_scale, cfg.budget_scale);
        p.averaging = cfg.averaging;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitOutcome {
    /// Parts in descending order of estimate; members ascending within a part.
    pub parts: Vec<Vec<usize>>,
    /// Contexts that had no estimate; they sit in the last part.
    pub unlabeled: Vec<usize>,
}

/// Sorts contexts by descending value (ties to the smaller context) and
/// starts a new part wherever consecutive values drop by at least
/// `threshold`. Contexts without a value join the last part.
pub fn partition_by_gaps(values: &[(usize, Option<f64>)], threshold: f64) -> SplitOutcome {
    let mut labeled: Vec<(usize, f64)> = values.iter().filter_map(|&(i, v)| v.map(|v| (i, v))).collect();
    labeled.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut unlabeled: Vec<usize> = values.iter().filter(|(_, v)| v.is_none()).map(|&(i, _)| i).collect();
    unlabeled.sort_unstable();

    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<f64> = None;
    for &(i, v) in &labeled {
        match prev {
            Some(p) if p - v >= threshold => parts.push(vec![i]),
            None => parts.push(vec![i]),
            Some(_) => parts.last_mut().expect("nonempty").push(i),
        }
        prev = Some(v);
    }
    if parts.is_empty() {
        parts.push(Vec::new());
    }
    parts.last_mut().expect("nonempty").extend(&unlabeled);
    for part in &mut parts {
        part.sort_unstable();
    }
    parts.retain(|p| !p.is_empty());
    SplitOutcome { parts, unlabeled }
}

/// Collects data with arm `arm` forced on every context of `cluster` (other
/// contexts explore their sets in `explore`) and partitions the cluster by
/// gaps in the estimates of `arm`.
pub fn split_cluster<R: Rng + ?Sized>(
    env: &mut EnvHandle,
    rng: &mut R,
    params: &SplitParams,
    explore: &ExploreSets,
    cluster: &[usize],
    arm: usize,
) -> Result<SplitOutcome> {
    if cluster.is_empty() {
        return Err(Error::Validation("cannot split an empty cluster".into()));
    }
    if arm >= env.actions() {
        return Err(Error::Usage(format!("arm {arm} out of range")));
    }
    let mut sets: Vec<Vec<usize>> = (0..explore.contexts()).map(|i| explore.get(i).to_vec()).collect();
    for &i in cluster {
        sets[i] = vec![arm];
    }
    let forced = ExploreSets::new(sets, env.actions())?;
    let out = collect(env, rng, params.budget, params.level, &forced, params.averaging)?;
    let values: Vec<(usize, Option<f64>)> = cluster.iter().map(|&i| (i, out.get(i, arm))).collect();
    Ok(partition_by_gaps(&values, params.threshold))
}
