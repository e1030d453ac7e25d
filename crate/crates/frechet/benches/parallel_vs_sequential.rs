//! Parallel (rayon) vs sequential throughput on the data-parallel cores:
//! curve fitting across a predictor grid, benchmark replicates, and
//! bootstrap resampling. The parallelism level is a runtime switch, so one
//! binary measures both paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use frechet::estimators::{fit_curve, EstimatorKind, FitConfig};
use frechet::inference::bootstrap_bias_variance;
use frechet::simulation::{generate_torus_sample, run_benchmark, Scenario, ScenarioKind};

fn threads_under_test() -> Vec<usize> {
    let max = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    if max > 1 {
        vec![1, max]
    } else {
        vec![1]
    }
}

fn small_cfg() -> FitConfig {
    let mut cfg = FitConfig::new(0.12);
    cfg.optimizer.grid_u = 24;
    cfg.optimizer.grid_v = 48;
    cfg
}

fn bench_fit_curve(c: &mut Criterion) {
    let data = generate_torus_sample(60, 15.0, 11).unwrap();
    let cfg = small_cfg();
    let grid: Vec<f64> = (0..25).map(|k| 0.02 + 0.04 * k as f64).collect();
    let mut group = c.benchmark_group("fit_curve_lfrk");
    group.sample_size(10);
    for threads in threads_under_test() {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    let r =
                        fit_curve(&data, &grid, EstimatorKind::Lfrk, &cfg, threads).unwrap();
                    black_box(r.fitted.len())
                })
            },
        );
    }
    group.finish();
}

fn bench_benchmark_replicates(c: &mut Criterion) {
    let scenario = Scenario {
        kind: ScenarioKind::TorusCurve { kappa: 15.0 },
        n: 40,
        seed: 0,
    };
    let cfg = small_cfg();
    let mut group = c.benchmark_group("benchmark_reps_lfrk");
    group.sample_size(10);
    for threads in threads_under_test() {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    let (report, _) = run_benchmark(
                        &scenario,
                        &[EstimatorKind::Lfrk],
                        &[0.10, 0.12],
                        6,
                        123,
                        threads,
                        &cfg,
                    )
                    .unwrap();
                    black_box(report.summaries.len())
                })
            },
        );
    }
    group.finish();
}

fn bench_bootstrap(c: &mut Criterion) {
    let data = generate_torus_sample(50, 15.0, 5).unwrap();
    let cfg = small_cfg();
    let mut group = c.benchmark_group("bootstrap_bias_variance");
    group.sample_size(10);
    for threads in threads_under_test() {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    let aq =
                        bootstrap_bias_variance(&data, 0.5, &cfg, 100, 9, threads).unwrap();
                    black_box(aq.bias_hat)
                })
            },
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_fit_curve,
    bench_benchmark_replicates,
    bench_bootstrap
);
criterion_main!(benches);
