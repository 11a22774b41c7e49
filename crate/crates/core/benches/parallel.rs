//! Trial loops on the rayon pool vs a single worker.
//!
//! `cargo bench -p optpuf` times the full pool against a one-thread pool;
//! `cargo bench -p optpuf --no-default-features` times the sequential fallback
//! under the same benchmark names with a `sequential` label.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use optpuf::bounds::{chernoff_validate, ExpandedChallenges};
use optpuf::experiment::{run_trials, AttackSpec};
use optpuf::lwe::lwe_contrast;
use optpuf::{ChallengeDistribution, MonomialBasis, NoiseModel};

fn attack_spec() -> AttackSpec {
    AttackSpec {
        n_mask: 6,
        n_pixels: 4,
        eta: vec![],
        degree: None,
        distribution: ChallengeDistribution::Uniform,
        noise: NoiseModel::BoundedUniform { a: 0.05 },
        m: 2_000,
        pac_samples: 2_000,
        epsilon: 0.1,
    }
}

fn chernoff_source() -> ExpandedChallenges {
    ExpandedChallenges {
        basis: MonomialBasis::new(4, 2).unwrap(),
        dist: ChallengeDistribution::Uniform,
    }
}

#[cfg(feature = "parallel")]
fn modes() -> Vec<(String, rayon::ThreadPool)> {
    let all = rayon::current_num_threads();
    [all, 1]
        .into_iter()
        .map(|t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            (format!("rayon-{t}"), pool)
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn in_mode<R: Send>(pool: &rayon::ThreadPool, f: impl FnOnce() -> R + Send) -> R {
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(String, ())> {
    vec![("sequential".to_string(), ())]
}

#[cfg(not(feature = "parallel"))]
fn in_mode<R: Send>(_: &(), f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn attack_trials(c: &mut Criterion) {
    let spec = attack_spec();
    let mut group = c.benchmark_group("attack_trials");
    for (label, pool) in modes() {
        group.bench_function(BenchmarkId::new(label, 16), |b| {
            b.iter(|| in_mode(&pool, || run_trials(&spec, 16, 1)))
        });
    }
    group.finish();
}

fn chernoff(c: &mut Criterion) {
    let source = chernoff_source();
    let mut group = c.benchmark_group("chernoff");
    for (label, pool) in modes() {
        group.bench_function(BenchmarkId::new(label, 64), |b| {
            b.iter(|| in_mode(&pool, || chernoff_validate(&source, 5_000, 64, 1).unwrap()))
        });
    }
    group.finish();
}

fn lwe(c: &mut Criterion) {
    let mut group = c.benchmark_group("lwe_contrast");
    for (label, pool) in modes() {
        group.bench_function(BenchmarkId::new(label, 20), |b| {
            b.iter(|| in_mode(&pool, || lwe_contrast(32, 97, 2.0, 1600, 20, 0).unwrap()))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = attack_trials, chernoff, lwe
}
criterion_main!(benches);
