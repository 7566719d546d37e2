use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reward noise model. Both are 1-subgaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `y = A(i,j) + N(0,1)`.
    #[default]
    GaussianUnit,
    /// `y ~ Bernoulli(A(i,j))`; requires every mean in `[0,1]`.
    Bernoulli,
}

/// Dense mean-reward table with its context distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    contexts: usize,
    actions: usize,
    means: Vec<f64>,
    best: Vec<f64>,
    nu: Vec<f64>,
    noise: NoiseKind,
}

pub(crate) fn validate_distribution(nu: &[f64]) -> Result<()> {
    if nu.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Validation("context distribution has a negative or non-finite entry".into()));
    }
    let total: f64 = nu.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "context distribution sums to {total}, expected 1"
        )));
    }
    Ok(())
}

impl BanditInstance {
    /// Builds an instance from a row-major `S x K` mean table.
    ///
    /// Means may be any finite reals under gaussian noise; bernoulli noise
    /// requires `[0,1]`.
    pub fn from_means(means: Vec<Vec<f64>>, nu: Vec<f64>, noise: NoiseKind) -> Result<Self> {
        let contexts = means.len();
        if contexts == 0 {
            return Err(Error::Config("instance needs at least one context".into()));
        }
        let actions = means[0].len();
        if actions == 0 {
            return Err(Error::Config("instance needs at least one action".into()));
        }
        if means.iter().any(|row| row.len() != actions) {
            return Err(Error::Config("mean table rows have different lengths".into()));
        }
        if nu.len() != contexts {
            return Err(Error::Config(format!(
                "context distribution has {} entries for {} contexts",
                nu.len(),
                contexts
            )));
        }
        validate_distribution(&nu)?;
        let flat: Vec<f64> = means.into_iter().flatten().collect();
        if flat.iter().any(|m| !m.is_finite()) {
            return Err(Error::Validation("mean table has a non-finite entry".into()));
        }
        if noise == NoiseKind::Bernoulli && flat.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::Validation(
                "bernoulli noise requires every mean reward in [0,1]".into(),
            ));
        }
        let best = flat
            .chunks(actions)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(Self { contexts, actions, means: flat, best, nu, noise })
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    #[inline]
    pub fn mean(&self, context: usize, arm: usize) -> f64 {
        self.means[context * self.actions + arm]
    }

    pub fn row(&self, context: usize) -> &[f64] {
        &self.means[context * self.actions..(context + 1) * self.actions]
    }

    /// `max_j A(i,j)`.
    #[inline]
    pub fn best_mean(&self, context: usize) -> f64 {
        self.best[context]
    }

    /// Smallest arm index attaining the row maximum.
    pub fn best_arm(&self, context: usize) -> usize {
        let row = self.row(context);
        let best = self.best[context];
        row.iter().position(|&m| m == best).unwrap_or(0)
    }

    /// Per-context optimal policy (ties broken toward the smallest arm).
    pub fn optimal_policy(&self) -> Policy {
        Policy { actions: (0..self.contexts).map(|i| self.best_arm(i)).collect() }
    }

    /// `max_{i,j} A(i,j) - min_{i,j} A(i,j)`.
    pub fn spread(&self) -> f64 {
        let hi = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.means.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// A total map from contexts to arms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Result<Self> {
        if let Some(&bad) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(Error::Validation(format!(
                "policy action {bad} out of range for {num_actions} actions"
            )));
        }
        Ok(Self { actions })
    }

    /// The constant policy `i -> arm`.
    pub fn constant(contexts: usize, arm: usize) -> Self {
        Self { actions: vec![arm; contexts] }
    }

    pub fn action(&self, context: usize) -> usize {
        self.actions[context]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// `sum_i nu(i) (max_j A(i,j) - A(i, pi(i)))`.
///
/// Panics if the policy does not cover every context of the instance.
pub fn exact_policy_gap(instance: &BanditInstance, policy: &Policy) -> f64 {
    assert_eq!(policy.len(), instance.contexts(), "policy must be total");
    (0..instance.contexts())
        .filter(|&i| instance.nu[i] > 0.0)
        .map(|i| instance.nu[i] * (instance.best_mean(i) - instance.mean(i, policy.action(i))))
        .sum()
}
