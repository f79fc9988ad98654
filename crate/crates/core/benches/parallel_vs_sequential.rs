use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use twinfock::baselines::{greedy_rollout, linspace, ramp_search};
use twinfock::env::{Init, QuantumEnv, QuantumEnvConfig};
use twinfock::eval::noise_eval;
use twinfock::rl::{train, InitMode, PolicyParams, TrainConfig};
use twinfock::seed::SeedTree;
use twinfock::Exec;

fn executors() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::sequential())];
    // at least two threads, so single-core machines still measure the pool overhead
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let par = Exec::with_workers(cores.max(2));
    if par.is_parallel() {
        v.push(("parallel", par));
    }
    v
}

fn env(n: usize) -> QuantumEnv {
    QuantumEnv::new(QuantumEnvConfig::with_atoms(n)).unwrap()
}

fn bench_noise(c: &mut Criterion) {
    let mut g = c.benchmark_group("noise_eval_n10_32_samples");
    g.sample_size(10);
    let e = env(10);
    let p = PolicyParams::new(3, &[64, 32], -6.0, 6.0, &mut SeedTree::new(1).rng()).unwrap();
    for (name, exec) in executors() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(noise_eval(&e, &p, 0.1, 32, SeedTree::new(2), &exec).unwrap()))
        });
    }
    g.finish();
}

fn bench_ramp(c: &mut Criterion) {
    let mut g = c.benchmark_group("ramp_search_n10_8x8x4");
    g.sample_size(10);
    let e = env(10);
    let q = linspace(-6.0, 6.0, 8);
    let t = linspace(5.0, 20.0, 4);
    for (name, exec) in executors() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(ramp_search(&e, &Init::Fixed, &q, &q, &t, &exec).unwrap().final_fidelity))
        });
    }
    g.finish();
}

fn bench_greedy(c: &mut Criterion) {
    let mut g = c.benchmark_group("greedy_n20_121_points");
    g.sample_size(10);
    let grid = linspace(-6.0, 6.0, 121);
    for (name, exec) in executors() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut e = env(20).with_cache();
                black_box(greedy_rollout(&mut e, &Init::Fixed, &grid, &exec).unwrap().final_fidelity())
            })
        });
    }
    g.finish();
}

fn bench_training(c: &mut Criterion) {
    let mut g = c.benchmark_group("train_n4_5_epochs_16_episodes");
    g.sample_size(10);
    let cfg = TrainConfig { total_epochs: 5, episodes_per_epoch: 16, ..TrainConfig::quantum(4) };
    let e = env(4);
    for (name, exec) in executors() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(train(&e, &cfg, InitMode::Random, &exec).unwrap().curve.len()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_noise, bench_ramp, bench_greedy, bench_training);
criterion_main!(benches);
