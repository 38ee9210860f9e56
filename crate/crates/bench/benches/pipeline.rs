use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use phonation::dsp::BaselineExtractor;
use phonation::learn::{grid_search, GbdtModel, GbdtParams, Svm, SvmModel, SvmParams};
use phonation::{FeatureKind, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn voice(secs: f64) -> Vec<f64> {
    let sr = 16_000.0;
    (0..(sr * secs) as usize)
        .map(|i| {
            let t = i as f64 / sr;
            (1..=12).map(|h| (2.0 * PI * 196.0 * h as f64 * t).sin() / h as f64).sum()
        })
        .collect()
}

fn blobs(n: usize, dim: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 4;
        rows.push((0..dim).map(|d| if d % 4 == c { 1.5 } else { 0.0 } + rng.random::<f64>() - 0.5).collect::<Vec<_>>());
        y.push(c);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn features(c: &mut Criterion) {
    let ex = BaselineExtractor::standard();
    let samples = voice(3.0);
    let mut g = c.benchmark_group("features_3s");
    for kind in [FeatureKind::Spectrogram, FeatureKind::MelSpectrogram, FeatureKind::Mfcc] {
        g.bench_function(BenchmarkId::from_parameter(kind), |b| b.iter(|| ex.feature(kind, &samples).unwrap()));
    }
    g.finish();
}

fn classifiers(c: &mut Criterion) {
    let (x, y) = blobs(400, 39, 7);
    let mut g = c.benchmark_group("fit_400x39");
    g.sample_size(20);
    g.bench_function("svm_rbf", |b| b.iter(|| SvmModel::fit(&x, &y, &SvmParams::rbf(10.0, 1.0 / 39.0)).unwrap()));
    g.bench_function("svm_linear", |b| b.iter(|| SvmModel::fit(&x, &y, &SvmParams::linear(1.0)).unwrap()));
    let params = GbdtParams { n_rounds: 50, ..Default::default() };
    g.bench_function("gbdt_50_rounds", |b| b.iter(|| GbdtModel::fit(&x, &y, &params).unwrap()));
    g.finish();

    let (x, y) = blobs(200, 256, 11);
    let grid: Vec<SvmParams> = [0.1, 1.0, 10.0]
        .iter()
        .flat_map(|&c| [1.0 / 256.0, 1e-2].map(|gm| SvmParams::rbf(c, gm)))
        .collect();
    c.bench_function("svm_grid_search_200x256", |b| {
        b.iter_batched(|| grid.clone(), |grid| grid_search(&Svm, &x, &y, &grid, 5, 42).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, features, classifiers);
criterion_main!(benches);
