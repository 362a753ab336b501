//! Hot kernels: loss evaluation, joint fit and the bootstrap backtests.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use esb_bench::garch_fixture;
use esb_core::{
    average_loss, er_test, esr_bivariate, esr_intercept, fit_joint, Design, EsrMode, Hypothesis,
    ProbabilityLevel,
};

const TAU: ProbabilityLevel = ProbabilityLevel::BASEL;

fn loss_and_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("jointreg");
    for n in [250usize, 2500] {
        let (y, fc) = garch_fixture(n, 1);
        let design = Design::with_intercept(&fc.es).unwrap();
        let fit = fit_joint(&y, &design, TAU).unwrap();
        let mut theta = fit.theta_q.clone();
        theta.extend_from_slice(&fit.theta_e);
        group.bench_with_input(BenchmarkId::new("average_loss", n), &n, |b, _| {
            b.iter(|| average_loss(black_box(&theta), &y, &design, TAU))
        });
        group.bench_with_input(BenchmarkId::new("fit_joint", n), &n, |b, _| {
            b.iter(|| fit_joint(black_box(&y), &design, TAU).unwrap())
        });
    }
    group.finish();
}

fn backtests(c: &mut Criterion) {
    let mut group = c.benchmark_group("backtests");
    group.sample_size(10);
    let (y, fc) = garch_fixture(1000, 2);
    group.bench_function("esr_bivariate_asymptotic", |b| {
        b.iter(|| esr_bivariate(black_box(&y), &fc, TAU, EsrMode::Asymptotic, 0).unwrap())
    });
    group.bench_function("esr_intercept_boot_200", |b| {
        b.iter(|| {
            esr_intercept(black_box(&y), &fc, TAU, EsrMode::Bootstrap(200), Hypothesis::TwoSided, 3)
                .unwrap()
        })
    });
    group.bench_function("esr_bivariate_boot_50", |b| {
        b.iter(|| esr_bivariate(black_box(&y), &fc, TAU, EsrMode::Bootstrap(50), 3).unwrap())
    });
    group.bench_function("er_1000", |b| {
        b.iter(|| er_test(black_box(&y), &fc, TAU, false, Hypothesis::TwoSided, 1000, 4).unwrap())
    });
    group.finish();
}

criterion_group!(benches, loss_and_fit, backtests);
criterion_main!(benches);
