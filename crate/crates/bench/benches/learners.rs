use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use lumpband::{
    collect, exp3_constant_experts, pac_uniform, regret_ucb_per_context, run_regret_uniform, Averaging,
    BaselineConfig, EnvHandle, ExploreSets, PacConfig, RegretConfig,
};
use lumpband_bench::instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_collect(c: &mut Criterion) {
    let inst = instance(60, 30, 3, 1);
    let explore = ExploreSets::full(60, 30);
    let mut group = c.benchmark_group("collect");
    group.throughput(Throughput::Elements(100_000));
    group.bench_function("S60_K30_100k", |b| {
        b.iter_batched(
            || (EnvHandle::new(inst.clone(), 7), ChaCha8Rng::seed_from_u64(7)),
            |(mut env, mut rng)| collect(&mut env, &mut rng, 100_000, 6, &explore, Averaging::FreshEpoch).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn bench_pac(c: &mut Criterion) {
    let inst = instance(20, 10, 2, 2);
    let cfg = PacConfig::new(0.25, 0.1, 2).with_scale(0.01);
    let mut group = c.benchmark_group("pac");
    group.sample_size(10);
    group.bench_function("uniform_S20_K10", |b| {
        b.iter(|| pac_uniform(&mut EnvHandle::new(inst.clone(), 3), &cfg, 3).unwrap())
    });
    group.finish();
}

fn bench_regret(c: &mut Criterion) {
    const T: u64 = 50_000;
    let inst = instance(20, 10, 2, 3);
    let mut group = c.benchmark_group("regret");
    group.sample_size(10);
    group.throughput(Throughput::Elements(T));
    let cfg = RegretConfig::new(2).with_scales(0.05, 1.0);
    group.bench_function("uniform", |b| {
        b.iter(|| run_regret_uniform(&mut EnvHandle::new(inst.clone(), 4), &cfg, T, 4).unwrap())
    });
    let base = BaselineConfig::default();
    group.bench_function("ucb", |b| {
        b.iter(|| regret_ucb_per_context(&mut EnvHandle::new(inst.clone(), 4), &base, T).unwrap())
    });
    group.bench_function("exp3", |b| {
        b.iter(|| exp3_constant_experts(&mut EnvHandle::new(inst.clone(), 4), &base, T, 4).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_collect, bench_pac, bench_regret);
criterion_main!(benches);
