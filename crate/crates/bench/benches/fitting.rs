use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plateau_bench::{ensemble, noiseless_points, noisy_points, scored_labels};
use plateau_core::{extrapolation_mae, fit, roc_auc, FitConfig, PowerLawCurve};

fn fitting(c: &mut Criterion) {
    let cfg = FitConfig::default();
    let exact = noiseless_points();
    let noisy = noisy_points(7);
    c.bench_function("fit/noiseless", |b| b.iter(|| fit(black_box(&exact), &cfg)));
    c.bench_function("fit/noisy", |b| b.iter(|| fit(black_box(&noisy), &cfg)));

    let series = ensemble(50, 11);
    let mut group = c.benchmark_group("extrapolation_mae");
    group.sample_size(10);
    group.bench_function("50_series", |b| {
        b.iter(|| extrapolation_mae(black_box(&series), &[20, 35, 50, 100], &cfg))
    });
    group.finish();
}

fn inversion(c: &mut Criterion) {
    let curve = PowerLawCurve::new(0.95, 0.5, 1.0).unwrap();
    c.bench_function("n_at_threshold", |b| {
        b.iter(|| curve.n_at_threshold(black_box(0.9), 1_000_000))
    });
}

fn roc(c: &mut Criterion) {
    let mut group = c.benchmark_group("roc_auc");
    for len in [1_000u64, 100_000] {
        let (scores, labels) = scored_labels(len, len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| roc_auc(black_box(&scores), black_box(&labels)))
        });
    }
    group.finish();
}

criterion_group!(benches, fitting, inversion, roc);
criterion_main!(benches);
