use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use vpt_bench::{synthetic_deltas, synthetic_ratios};
use vpt_core::asymptotics::solve_gamma_c;
use vpt_core::oracle::ground_energy;
use vpt_core::series::{rs_coefficients, rs_coefficients_capped};
use vpt_core::singularity::{fit_oscillation, fit_ratio_singularity};
use vpt_core::variational::{VariationalConfig, VariationalEngine};
use vpt_core::BigReal;

fn series(c: &mut Criterion) {
    let mut group = c.benchmark_group("rs_coefficients");
    group.sample_size(10);
    for order in [50usize, 100, 200] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, &order| {
            b.iter(|| rs_coefficients(black_box(order)).unwrap())
        });
    }
    group.finish();
}

fn approximants(c: &mut Criterion) {
    let mut group = c.benchmark_group("alpha_approximants");
    group.sample_size(10);
    let engine = VariationalEngine::new(rs_coefficients_capped(120, 120).unwrap());
    for order in [23usize, 80, 120] {
        let config = VariationalConfig::strong_coupling(order).unwrap();
        group.bench_with_input(BenchmarkId::new("alpha_0", order), &config, |b, config| {
            b.iter(|| engine.alpha_approximants(config, 0, None).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("alpha_0..22", order), &config, |b, config| {
            b.iter(|| engine.alpha_approximants(config, 22, None).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground_energy");
    group.sample_size(10);
    let omega = BigReal::parse("1", 60).unwrap();
    for g in ["0.1", "2", "500"] {
        let coupling = BigReal::parse(g, 60).unwrap();
        group.bench_with_input(BenchmarkId::new("30 digits", g), &coupling, |b, coupling| {
            b.iter(|| ground_energy(coupling, &omega, 30).unwrap())
        });
    }
    group.finish();
}

fn fits(c: &mut Criterion) {
    let mut group = c.benchmark_group("fits");
    group.sample_size(10);
    let deltas = synthetic_deltas(38..=122);
    let ratios = synthetic_ratios(22);
    group.bench_function("oscillation", |b| {
        b.iter(|| fit_oscillation(black_box(&deltas)).unwrap())
    });
    group.bench_function("ratio", |b| {
        b.iter(|| fit_ratio_singularity(black_box(&ratios), 6).unwrap())
    });
    group.bench_function("saddle constants 30 digits", |b| {
        b.iter(|| solve_gamma_c(black_box(30)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, series, approximants, oracle, fits);
criterion_main!(benches);
