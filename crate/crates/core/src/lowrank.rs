//! Reduction from contextual low-rank bandits to context-lumpable ones.
//!
//! Rows of `U` live in `[-B, B]^r`. An `alpha`-grid of that cube groups
//! contexts whose rows are close, so the problem is approximately lumpable
//! with at most `min(ceil(2B/alpha)^r, S)` blocks. The learners run the
//! lumpable algorithms with that block count and ignore the misspecification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::{EnvHandle, LowRankModel};
use crate::error::{Error, Result};
use crate::pac::{pac_general, PacConfig, PacResult};
use crate::regret::{run_regret_nonuniform, RegretConfig, RunTrace};

/// Cells per coordinate, `ceil(2B/alpha)`, at least 1.
pub fn cells_per_axis(alpha: f64, bound: f64) -> u64 {
    ((2.0 * bound / alpha).ceil() as u64).max(1)
}

/// A-priori block count `min(ceil(2B/alpha)^r, S)`.
pub fn block_bound(rank: usize, alpha: f64, bound: f64, contexts: usize) -> usize {
    let axis = cells_per_axis(alpha, bound) as f64;
    let cells = axis.powi(rank as i32);
    if cells >= contexts as f64 {
        contexts
    } else {
        cells as usize
    }
}

/// Grid cell of `w`: per coordinate `ceil((w_k + B)/alpha)` clamped to
/// `[1, ceil(2B/alpha)]`.
pub fn grid_cell(w: &[f64], alpha: f64, bound: f64) -> Result<Vec<u64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
    }
    let top = cells_per_axis(alpha, bound);
    w.iter()
        .map(|&x| {
            if !(x.abs() <= bound) {
                return Err(Error::Validation(format!("coordinate {x} outside [-{bound}, {bound}]")));
            }
            let c = ((x + bound) / alpha).ceil();
            Ok((c.max(1.0) as u64).min(top))
        })
        .collect()
}

/// Grid covering of a model's context rows. Building one needs `U`, so it
/// serves as a test oracle; learners only use [`block_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReduction {
    pub alpha: f64,
    pub bound: f64,
    pub rank: usize,
    /// Cell index per context, numbered by first occurrence.
    pub cell_of: Vec<usize>,
    pub cells: Vec<Vec<u64>>,
}

impl GridReduction {
    pub fn build(model: &LowRankModel, alpha: f64) -> Result<Self> {
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut cells = Vec::new();
        let mut cell_of = Vec::with_capacity(model.contexts());
        for i in 0..model.contexts() {
            let id = grid_cell(model.context_vector(i), alpha, model.bound())?;
            let next = cells.len();
            let k = *index.entry(id.clone()).or_insert_with(|| {
                cells.push(id);
                next
            });
            cell_of.push(k);
        }
        Ok(Self { alpha, bound: model.bound(), rank: model.rank(), cell_of, cells })
    }

    /// Number of occupied cells.
    pub fn occupied(&self) -> usize {
        self.cells.len()
    }
}

/// `alpha = ((S+K)/T)^p` with `p = 1/(3r+2)`.
pub fn regret_alpha(rank: usize, contexts: usize, actions: usize, horizon: u64) -> f64 {
    let p = 1.0 / (3.0 * rank as f64 + 2.0);
    ((contexts + actions) as f64).powf(p) * (horizon as f64).powf(-p)
}

/// PAC learning with `alpha = eps`: runs the general learner with `r`
/// replaced by the cell-count bound. `base.blocks` is ignored.
pub fn lowrank_pac(env: &mut EnvHandle, rank: usize, bound: f64, base: &PacConfig, seed: u64) -> Result<PacResult> {
    validate(rank, bound)?;
    let mut cfg = base.clone();
    cfg.blocks = block_bound(rank, base.eps, bound, env.contexts());
    pac_general(env, &cfg, seed)
}

/// Regret minimization for `horizon` steps with the non-uniform learner and
/// the cell-count bound for `alpha = ((S+K)/T)^{1/(3r+2)}`. `base.blocks` is
/// ignored.
pub fn lowrank_regret(
    env: &mut EnvHandle,
    rank: usize,
    bound: f64,
    horizon: u64,
    base: &RegretConfig,
    seed: u64,
) -> Result<RunTrace> {
    validate(rank, bound)?;
    if horizon == 0 {
        return Err(Error::Validation("horizon T must be positive".into()));
    }
    let alpha = regret_alpha(rank, env.contexts(), env.actions(), horizon);
    let mut cfg = base.clone();
    cfg.blocks = block_bound(rank, alpha, bound, env.contexts());
    let mut trace = run_regret_nonuniform(env, &cfg, horizon, seed)?;
    trace.algorithm = "lowrank".into();
    Ok(trace)
}

fn validate(rank: usize, bound: f64) -> Result<()> {
    if rank == 0 {
        return Err(Error::Validation("rank must be at least 1".into()));
    }
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::Validation(format!("bound B must be nonnegative, got {bound}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_examples() {
        assert_eq!(grid_cell(&[-1.0, -1.0], 0.5, 1.0).unwrap(), vec![1, 1]);
        assert_eq!(grid_cell(&[0.3], 0.5, 1.0).unwrap(), vec![3]);
        assert_eq!(grid_cell(&[1.0], 0.5, 1.0).unwrap(), vec![4]);
        assert!(grid_cell(&[1.5], 0.5, 1.0).is_err());
        assert_eq!(grid_cell(&[0.0], 0.5, 0.0).unwrap(), vec![1]);
    }

    #[test]
    fn alpha_formula() {
        assert!((regret_alpha(1, 100, 100, 1_000_000) - 0.1821).abs() < 1e-4);
    }

    #[test]
    fn block_bound_caps_at_s() {
        assert_eq!(block_bound(1, 0.5, 1.0, 40), 4);
        assert_eq!(block_bound(3, 0.1, 1.0, 40), 40);
        assert_eq!(block_bound(2, 3.0, 1.0, 40), 1);
        assert_eq!(block_bound(2, 0.1, 0.0, 40), 1);
    }
}
