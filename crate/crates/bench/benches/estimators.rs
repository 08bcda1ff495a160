use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kscore_core::estimators::{distributional_covariance, distributional_variance, kernel_entropy};
use kscore_core::kernels::gram;
use kscore_core::{KernelSpec, PairedSampleBlock, Point, SampleBlock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_points(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Point> {
    (0..count)
        .map(|_| Point::Dense((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect()
}

fn token_points(rng: &mut ChaCha8Rng, count: usize, len: usize) -> Vec<Point> {
    (0..count)
        .map(|_| Point::Tokens((0..len).map(|_| rng.random_range(0..50)).collect()))
        .collect()
}

fn bench_gram(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("gram");
    for &n in &[32usize, 128, 512] {
        let points = dense_points(&mut rng, n, 64);
        let spec = KernelSpec::rbf_default();
        group.bench_with_input(BenchmarkId::new("rbf_d64", n), &points, |b, p| {
            b.iter(|| gram(&spec, black_box(p)).unwrap())
        });
    }
    let seqs = token_points(&mut rng, 64, 40);
    let cs = KernelSpec::cs_subsequence(2).unwrap();
    group.bench_function("cs_t2_len40_n64", |b| b.iter(|| gram(&cs, black_box(&seqs)).unwrap()));
    group.finish();
}

fn bench_estimators(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = KernelSpec::rbf_default();
    let mut group = c.benchmark_group("estimators");
    for &(n, m) in &[(10usize, 10usize), (20, 20), (40, 40)] {
        let clusters: Vec<Vec<Point>> = (0..n).map(|_| dense_points(&mut rng, m, 16)).collect();
        let block = SampleBlock::new(clusters).unwrap();
        let id = format!("{n}x{m}");
        group.bench_with_input(BenchmarkId::new("variance", &id), &block, |b, blk| {
            b.iter(|| distributional_variance(&spec, black_box(blk)).unwrap())
        });
        let paired = PairedSampleBlock::with_itself(block.clone());
        group.bench_with_input(BenchmarkId::new("covariance", &id), &paired, |b, p| {
            b.iter(|| distributional_covariance(&spec, black_box(p)).unwrap())
        });
    }
    let gens = dense_points(&mut rng, 100, 16);
    group.bench_function("entropy_100", |b| b.iter(|| kernel_entropy(&spec, black_box(&gens)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_gram, bench_estimators);
criterion_main!(benches);
