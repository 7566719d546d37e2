use rand::Rng;
use serde::{Deserialize, Serialize};

use super::instance::{validate_distribution, BanditInstance, NoiseKind};
use crate::error::{Error, Result};
use crate::seed::{stream_rng, streams};

/// A rank-`r` instance `A = U V` with `|U| <= B` entrywise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankModel {
    /// `S x r`; row `i` is the latent vector of context `i`.
    u: Vec<Vec<f64>>,
    /// `r x K`; column `j` is the latent vector of arm `j`.
    v: Vec<Vec<f64>>,
    bound: f64,
    nu: Vec<f64>,
    noise: NoiseKind,
}

impl LowRankModel {
    pub fn new(
        u: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        bound: f64,
        nu: Vec<f64>,
        noise: NoiseKind,
    ) -> Result<Self> {
        let rank = v.len();
        if u.is_empty() || rank == 0 || v[0].is_empty() {
            return Err(Error::Config("low-rank factors must be nonempty".into()));
        }
        if u.iter().any(|row| row.len() != rank) {
            return Err(Error::Config(format!("U rows must have length r = {rank}")));
        }
        let k = v[0].len();
        if v.iter().any(|row| row.len() != k) {
            return Err(Error::Config("V rows must share a length".into()));
        }
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::Validation(format!("coordinate bound must be finite and >= 0, got {bound}")));
        }
        if u.iter().flatten().any(|x| x.abs() > bound) {
            return Err(Error::Validation("an entry of U exceeds the coordinate bound".into()));
        }
        if nu.len() != u.len() {
            return Err(Error::Config("context distribution length must equal S".into()));
        }
        validate_distribution(&nu)?;
        let model = Self { u, v, bound, nu, noise };
        // Surface bernoulli range problems at construction.
        BanditInstance::from_means(model.mean_table(), model.nu.clone(), noise)?;
        Ok(model)
    }

    pub fn contexts(&self) -> usize {
        self.u.len()
    }

    pub fn actions(&self) -> usize {
        self.v[0].len()
    }

    pub fn rank(&self) -> usize {
        self.v.len()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn u(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise
    }

    /// Latent vector `w_i` of a context.
    pub fn context_vector(&self, context: usize) -> &[f64] {
        &self.u[context]
    }

    /// `sum_k |V(k, j)|`.
    pub fn arm_l1(&self, arm: usize) -> f64 {
        self.v.iter().map(|row| row[arm].abs()).sum()
    }

    pub fn mean(&self, context: usize, arm: usize) -> f64 {
        self.u[context].iter().zip(&self.v).map(|(w, row)| w * row[arm]).sum()
    }

    fn mean_table(&self) -> Vec<Vec<f64>> {
        (0..self.contexts())
            .map(|i| (0..self.actions()).map(|j| self.mean(i, j)).collect())
            .collect()
    }

    pub fn instance(&self) -> BanditInstance {
        BanditInstance::from_means(self.mean_table(), self.nu.clone(), self.noise)
            .expect("validated at construction")
    }
}

/// Random rank-`r` model with uniform contexts.
///
/// `U` is uniform on `[-B,B]` (or `[0,B]` with `nonneg`). `V` is uniform on
/// `[-1,1]` (or `[0,1]`), then every column is rescaled to l1-norm
/// `min(1, 1/B)`, so `|A(i,j)| <= 1` and two contexts whose latent vectors
/// differ by at most `alpha` per coordinate have rewards within `alpha`.
/// With `nonneg` all means lie in `[0,1]`.
pub fn build_lowrank_instance(
    contexts: usize,
    actions: usize,
    rank: usize,
    bound: f64,
    seed: u64,
    nonneg: bool,
    noise: NoiseKind,
) -> Result<LowRankModel> {
    if contexts == 0 || actions == 0 || rank == 0 {
        return Err(Error::Config("S, K and r must be positive".into()));
    }
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::Validation(format!("coordinate bound must be finite and >= 0, got {bound}")));
    }
    let mut rng = stream_rng(seed, streams::INSTANCE);
    let lo = if nonneg { 0.0 } else { -1.0 };
    let u: Vec<Vec<f64>> = (0..contexts)
        .map(|_| (0..rank).map(|_| bound * (lo + (1.0 - lo) * rng.random::<f64>())).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..actions).map(|_| lo + (1.0 - lo) * rng.random::<f64>()).collect())
        .collect();
    let target = if bound > 1.0 { 1.0 / bound } else { 1.0 };
    for j in 0..actions {
        let norm: f64 = v.iter().map(|row| row[j].abs()).sum();
        if norm > 0.0 {
            v.iter_mut().for_each(|row| row[j] *= target / norm);
        }
    }
    let nu = vec![1.0 / contexts as f64; contexts];
    LowRankModel::new(u, v, bound, nu, noise)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_nonneg_shares_the_optimal_arm() {
        let m = build_lowrank_instance(30, 8, 1, 1.0, 5, true, NoiseKind::Bernoulli).unwrap();
        let inst = m.instance();
        let arms: Vec<usize> = (0..30).filter(|&i| m.u()[i][0] > 0.0).map(|i| inst.best_arm(i)).collect();
        assert!(arms.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn zero_bound_gives_zero_means() {
        let m = build_lowrank_instance(5, 4, 2, 0.0, 1, false, NoiseKind::GaussianUnit).unwrap();
        let inst = m.instance();
        assert!((0..5).all(|i| inst.row(i).iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn entries_respect_bounds() {
        let m = build_lowrank_instance(20, 10, 3, 2.0, 9, false, NoiseKind::GaussianUnit).unwrap();
        assert!(m.u().iter().flatten().all(|x| x.abs() <= 2.0));
        for j in 0..10 {
            assert!(m.arm_l1(j) <= 0.5 + 1e-12);
        }
        let inst = m.instance();
        assert!((0..20).all(|i| inst.row(i).iter().all(|x| x.abs() <= 1.0 + 1e-12)));
    }

    #[test]
    fn nonneg_means_are_bernoulli_valid() {
        assert!(build_lowrank_instance(10, 5, 2, 1.0, 2, true, NoiseKind::Bernoulli).is_ok());
    }
}
