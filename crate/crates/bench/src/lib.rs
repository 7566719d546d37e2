//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use lumpband::env::{build_lumpable_instance, BlockSizes, LumpableSpec, MuSource, NuShape};
use lumpband::{BanditInstance, NoiseKind};

/// Equal-block lumpable instance with uniform context distribution and unit
/// Gaussian noise.
pub fn instance(contexts: usize, actions: usize, blocks: usize, seed: u64) -> Arc<BanditInstance> {
    let spec = LumpableSpec {
        contexts,
        actions,
        blocks,
        nu: NuShape::Uniform,
        block_sizes: BlockSizes::Equal,
        mu: MuSource::RandomUniform,
        noise: NoiseKind::GaussianUnit,
        seed,
    };
    Arc::new(build_lumpable_instance(&spec).expect("valid fixture").instance())
}
