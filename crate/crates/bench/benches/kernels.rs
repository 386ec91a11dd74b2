use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use wavestack_bench::{ndvi_stack, observation_series, regression, signals};
use wavestack_core::ridge_fit;
use wavestack_core::temporal::{composite, monthly_mean, CompositeMethod};
use wavestack_core::wavelet::{build_filter, dwt1_periodic, wavelet_feature_planes};

fn dwt(c: &mut Criterion) {
    let input = signals(1024, 1);
    let mut group = c.benchmark_group("dwt1_periodic");
    group.throughput(Throughput::Elements(input.len() as u64));
    for name in ["haar", "db4", "dmey"] {
        let filter = build_filter(name).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                for q in &input {
                    black_box(dwt1_periodic(black_box(q), &filter).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn feature_planes(c: &mut Criterion) {
    let stack = ndvi_stack(224, 2);
    let mut group = c.benchmark_group("wavelet_feature_planes_224");
    group.sample_size(20);
    group.throughput(Throughput::Elements(224 * 224));
    for name in ["haar", "db4", "dmey"] {
        let filter = build_filter(name).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(wavelet_feature_planes(&stack, &filter).unwrap()))
        });
    }
    group.finish();
}

fn aggregation(c: &mut Criterion) {
    let obs = observation_series(64, 4, 3, 3);
    let mut group = c.benchmark_group("aggregation_64px");
    group.sample_size(20);
    group.bench_function("composite_median", |b| {
        b.iter(|| black_box(composite(&obs, CompositeMethod::Median).unwrap()))
    });
    group.bench_function("composite_mean", |b| {
        b.iter(|| black_box(composite(&obs, CompositeMethod::Mean).unwrap()))
    });
    group.bench_function("monthly_mean", |b| {
        b.iter(|| black_box(monthly_mean(&obs, "b0").unwrap()))
    });
    group.finish();
}

fn ridge(c: &mut Criterion) {
    let mut group = c.benchmark_group("ridge_fit");
    for cols in [14, 26, 170] {
        let (x, y) = regression(1200, cols, 4);
        group.bench_function(BenchmarkId::from_parameter(cols), |b| {
            b.iter(|| black_box(ridge_fit(&x, &y, 1.0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, dwt, feature_planes, aggregation, ridge);
criterion_main!(benches);
