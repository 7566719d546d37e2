//! Per-context best-arm identification restricted to a candidate set.

use crate::env::{EnvHandle, Policy};
use crate::error::{Error, Result};
use crate::learner::{drive, steps_from, Learner};

/// Plays, on every arrival, the least-pulled arm of `W` for that context
/// (ties to the smaller arm) until the budget is spent.
#[derive(Debug, Clone)]
pub struct RestrictedSolver {
    arms: Vec<usize>,
    budget: u64,
    steps: u64,
    pulls: Vec<u64>,
    sums: Vec<f64>,
}

impl RestrictedSolver {
    /// `arms` must be nonempty; it is sorted and deduplicated.
    pub fn new(contexts: usize, mut arms: Vec<usize>, budget: u64) -> Self {
        arms.sort_unstable();
        arms.dedup();
        assert!(!arms.is_empty(), "candidate set must be nonempty");
        let width = arms.len();
        Self { arms, budget, steps: 0, pulls: vec![0; contexts * width], sums: vec![0.0; contexts * width] }
    }

    /// `ceil((4 S |W| / eps^2) ln(SK/delta))`, times `scale`.
    pub fn budget_for(contexts: usize, actions: usize, width: usize, eps: f64, delta: f64, scale: f64) -> u64 {
        let s = contexts as f64;
        steps_from(scale * 4.0 * s * width as f64 / (eps * eps) * (s * actions as f64 / delta).ln())
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn slot(&self, context: usize) -> std::ops::Range<usize> {
        let w = self.arms.len();
        context * w..(context + 1) * w
    }

    /// Empirically best arm of `W` per context; contexts never seen get the
    /// smallest arm of `W`.
    pub fn policy(&self, actions: usize) -> Policy {
        let contexts = self.pulls.len() / self.arms.len();
        let choice = (0..contexts)
            .map(|i| {
                let range = self.slot(i);
                let mut best: Option<(f64, usize)> = None;
                for (k, idx) in range.enumerate() {
                    let n = self.pulls[idx];
                    if n == 0 {
                        continue;
                    }
                    let m = self.sums[idx] / n as f64;
                    if best.is_none_or(|(b, _)| m > b) {
                        best = Some((m, self.arms[k]));
                    }
                }
                best.map_or(self.arms[0], |(_, arm)| arm)
            })
            .collect();
        Policy::new(choice, actions).expect("candidate arms are in range")
    }
}

impl Learner for RestrictedSolver {
    fn act(&mut self, context: usize) -> usize {
        let k = self.pulls[self.slot(context)]
            .iter()
            .enumerate()
            .min_by_key(|&(k, &n)| (n, k))
            .map_or(0, |(k, _)| k);
        self.arms[k]
    }

    fn observe(&mut self, context: usize, arm: usize, reward: f64) {
        self.steps += 1;
        if let Ok(k) = self.arms.binary_search(&arm) {
            let idx = context * self.arms.len() + k;
            self.pulls[idx] += 1;
            self.sums[idx] += reward;
        }
    }

    fn is_done(&self) -> bool {
        self.steps >= self.budget
    }
}

/// Runs the restricted solve on a fresh environment and returns the policy.
pub fn solve_restricted(env: &mut EnvHandle, arms: &[usize], eps: f64, delta: f64) -> Result<Policy> {
    if arms.is_empty() {
        return Err(Error::Validation("candidate set must be nonempty".into()));
    }
    if let Some(&bad) = arms.iter().find(|&&a| a >= env.actions()) {
        return Err(Error::Usage(format!("candidate arm {bad} out of range")));
    }
    let budget = RestrictedSolver::budget_for(env.contexts(), env.actions(), arms.len(), eps, delta, 1.0);
    let mut solver = RestrictedSolver::new(env.contexts(), arms.to_vec(), budget);
    drive(env, &mut solver, None)?;
    Ok(solver.policy(env.actions()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::env::{BanditInstance, NoiseKind};

    #[test]
    fn picks_best_candidate_without_noise() {
        let inst = BanditInstance::from_means(
            vec![vec![0.1, 0.9, 0.5], vec![0.8, 0.2, 0.5]],
            vec![0.5, 0.5],
            NoiseKind::GaussianUnit,
        )
        .unwrap();
        let mut env = EnvHandle::new(Arc::new(inst), 3).zero_noise();
        let policy = solve_restricted(&mut env, &[0, 2], 0.5, 0.1).unwrap();
        assert_eq!(policy.actions(), &[2, 0]);
    }

    #[test]
    fn least_pulled_routing_is_balanced() {
        let mut solver = RestrictedSolver::new(1, vec![3, 1], 6);
        let mut seen = vec![];
        while !solver.is_done() {
            let a = solver.act(0);
            solver.observe(0, a, 0.0);
            seen.push(a);
        }
        assert_eq!(seen, vec![1, 3, 1, 3, 1, 3]);
    }

    #[test]
    fn unseen_context_gets_smallest_candidate() {
        let solver = RestrictedSolver::new(2, vec![4, 2], 0);
        assert_eq!(solver.policy(5).actions(), &[2, 2]);
    }
}
