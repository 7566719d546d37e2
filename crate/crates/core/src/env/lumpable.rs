use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::instance::{validate_distribution, BanditInstance, NoiseKind};
use super::spec::{BlockSizes, LumpableSpec, MuSource};
use crate::error::{Error, Result};
use crate::seed::{stream_rng, streams};

/// A context-lumpable instance: `A(i,j) = mu[g(i)][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    contexts: usize,
    actions: usize,
    blocks: usize,
    mu: Vec<Vec<f64>>,
    grouping: Vec<usize>,
    nu: Vec<f64>,
    noise: NoiseKind,
}

impl RewardModel {
    /// Validates and assembles a model.
    ///
    /// `mu` is `r x K` with entries in `[0,1]`, `grouping` maps each context
    /// to a block and must hit every block, `nu` is a probability vector.
    pub fn new(
        mu: Vec<Vec<f64>>,
        grouping: Vec<usize>,
        nu: Vec<f64>,
        noise: NoiseKind,
    ) -> Result<Self> {
        let blocks = mu.len();
        let contexts = grouping.len();
        if blocks == 0 || contexts == 0 {
            return Err(Error::Config("model needs at least one block and one context".into()));
        }
        let actions = mu[0].len();
        if actions == 0 || mu.iter().any(|row| row.len() != actions) {
            return Err(Error::Config("block reward rows must share a nonzero length".into()));
        }
        if blocks > contexts.min(actions) {
            return Err(Error::Config(format!(
                "r = {blocks} exceeds min(S, K) = {}",
                contexts.min(actions)
            )));
        }
        if nu.len() != contexts {
            return Err(Error::Config(format!(
                "context distribution has {} entries for {contexts} contexts",
                nu.len()
            )));
        }
        validate_distribution(&nu)?;
        if mu.iter().flatten().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::Validation("block rewards must lie in [0,1]".into()));
        }
        let mut hit = vec![false; blocks];
        for &b in &grouping {
            if b >= blocks {
                return Err(Error::Config(format!("grouping uses block {b} of {blocks}")));
            }
            hit[b] = true;
        }
        if let Some(empty) = hit.iter().position(|h| !h) {
            return Err(Error::Validation(format!("block {empty} has no contexts")));
        }
        Ok(Self { contexts, actions, blocks, mu, grouping, nu, noise })
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn mu(&self) -> &[Vec<f64>] {
        &self.mu
    }

    pub fn grouping(&self) -> &[usize] {
        &self.grouping
    }

    pub fn block_of(&self, context: usize) -> usize {
        self.grouping[context]
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    pub fn mean(&self, context: usize, arm: usize) -> f64 {
        self.mu[self.grouping[context]][arm]
    }

    /// Block mass `omega(b) = sum_{i in B(b)} nu(i)`.
    pub fn block_mass(&self, block: usize) -> f64 {
        self.grouping
            .iter()
            .zip(&self.nu)
            .filter(|(g, _)| **g == block)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn block_members(&self, block: usize) -> Vec<usize> {
        (0..self.contexts).filter(|&i| self.grouping[i] == block).collect()
    }

    /// Optimal arm of a block (smallest index on ties).
    pub fn block_best_arm(&self, block: usize) -> usize {
        let row = &self.mu[block];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.iter().position(|&m| m == best).unwrap_or(0)
    }

    /// `max_j mu(b,j) - mu(b,arm)`.
    pub fn block_gap(&self, block: usize, arm: usize) -> f64 {
        let row = &self.mu[block];
        row.iter().copied().fold(f64::NEG_INFINITY, f64::max) - row[arm]
    }

    pub fn instance(&self) -> BanditInstance {
        let means = self.grouping.iter().map(|&b| self.mu[b].clone()).collect();
        BanditInstance::from_means(means, self.nu.clone(), self.noise)
            .expect("a validated model always yields a valid instance")
    }
}

/// Builds a lumpable model from a generator spec. Deterministic in `spec.seed`.
pub fn build_lumpable_instance(spec: &LumpableSpec) -> Result<RewardModel> {
    let (s, k, r) = (spec.contexts, spec.actions, spec.blocks);
    if s == 0 || k == 0 || r == 0 {
        return Err(Error::Config("S, K and r must be positive".into()));
    }
    if r > s.min(k) {
        return Err(Error::Config(format!("r = {r} exceeds min(S, K) = {}", s.min(k))));
    }
    let mut rng = stream_rng(spec.seed, streams::INSTANCE);
    let nu = spec.nu.weights(s)?;

    let grouping = match &spec.block_sizes {
        BlockSizes::Equal => (0..s).map(|i| i * r / s).collect(),
        BlockSizes::Explicit { sizes } => {
            if sizes.len() != r || sizes.iter().sum::<usize>() != s {
                return Err(Error::Config(format!(
                    "explicit block sizes {sizes:?} do not partition {s} contexts into {r} blocks"
                )));
            }
            sizes.iter().enumerate().flat_map(|(b, &n)| std::iter::repeat_n(b, n)).collect()
        }
        BlockSizes::Grouping { grouping } => {
            if grouping.len() != s {
                return Err(Error::Config(format!(
                    "grouping has {} entries for {s} contexts",
                    grouping.len()
                )));
            }
            grouping.clone()
        }
        BlockSizes::Random => {
            // One context per block first keeps every block nonempty.
            let mut order: Vec<usize> = (0..s).collect();
            order.shuffle(&mut rng);
            let mut g = vec![0; s];
            for (pos, &i) in order.iter().enumerate() {
                g[i] = if pos < r { pos } else { rng.random_range(0..r) };
            }
            g
        }
    };

    let mu = match &spec.mu {
        MuSource::RandomUniform => (0..r)
            .map(|_| (0..k).map(|_| rng.random::<f64>()).collect())
            .collect(),
        MuSource::Explicit { rows } => {
            if rows.len() != r || rows.iter().any(|row| row.len() != k) {
                return Err(Error::Config(format!("explicit mu must be {r} x {k}")));
            }
            rows.clone()
        }
    };
    RewardModel::new(mu, grouping, nu, spec.noise)
}

/// The three worst-case families used for the PAC lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardCase {
    /// Uniform contexts, `g(i) ~ Unif[K]`, `mu(b,j) = 1/2 + eps 1(b=j)`.
    One,
    /// Uniform contexts, `g(i) ~ Unif[r]`, same rewards.
    Two,
    /// `nu` uniform over the first `r` contexts, `g(i) = min(i, r)`, one random
    /// optimal arm per block.
    Three,
}

impl HardCase {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            other => Err(Error::Validation(format!("hard-instance case must be 1, 2 or 3, got {other}"))),
        }
    }
}

/// Builds a lower-bound instance. Rewards are bernoulli.
///
/// In case 1 only the labels actually drawn become blocks, relabelled in
/// increasing label order, so the model's block count can be below `K`.
pub fn build_hard_instance(
    case: HardCase,
    contexts: usize,
    actions: usize,
    blocks: usize,
    eps: f64,
    seed: u64,
) -> Result<RewardModel> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::Validation(format!("eps must lie in [0, 1/2), got {eps}")));
    }
    if contexts == 0 || actions == 0 || blocks == 0 {
        return Err(Error::Config("S, K and r must be positive".into()));
    }
    let mut rng = stream_rng(seed, streams::INSTANCE);
    let row = |label: usize| -> Vec<f64> {
        (0..actions).map(|j| if j == label { 0.5 + eps } else { 0.5 }).collect()
    };
    let uniform = vec![1.0 / contexts as f64; contexts];
    match case {
        HardCase::One => {
            if blocks < actions {
                return Err(Error::Config(format!("case 1 requires r >= K, got r = {blocks}, K = {actions}")));
            }
            let labels: Vec<usize> = (0..contexts).map(|_| rng.random_range(0..actions)).collect();
            let mut used: Vec<usize> = labels.clone();
            used.sort_unstable();
            used.dedup();
            let grouping = labels.iter().map(|l| used.binary_search(l).unwrap()).collect();
            let mu = used.iter().map(|&l| row(l)).collect();
            RewardModel::new(mu, grouping, uniform, NoiseKind::Bernoulli)
        }
        HardCase::Two => {
            if blocks > contexts.min(actions) {
                return Err(Error::Config(format!("case 2 requires r <= min(S, K), got r = {blocks}")));
            }
            // Keep every block nonempty: the first r contexts of a random order
            // take one block each.
            let mut order: Vec<usize> = (0..contexts).collect();
            order.shuffle(&mut rng);
            let mut grouping = vec![0; contexts];
            for (pos, &i) in order.iter().enumerate() {
                grouping[i] = if pos < blocks { pos } else { rng.random_range(0..blocks) };
            }
            let mu = (0..blocks).map(row).collect();
            RewardModel::new(mu, grouping, uniform, NoiseKind::Bernoulli)
        }
        HardCase::Three => {
            if blocks > contexts.min(actions) {
                return Err(Error::Config(format!("case 3 requires r <= min(S, K), got r = {blocks}")));
            }
            let grouping = (0..contexts).map(|i| i.min(blocks - 1)).collect();
            let mut nu = vec![0.0; contexts];
            nu[..blocks].iter_mut().for_each(|p| *p = 1.0 / blocks as f64);
            let mu = (0..blocks).map(|_| row(rng.random_range(0..actions))).collect();
            RewardModel::new(mu, grouping, nu, NoiseKind::Bernoulli)
        }
    }
}
