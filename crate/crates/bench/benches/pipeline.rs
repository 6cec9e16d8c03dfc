use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use reid_bench::{dataset, gaussian_rows, scaled_pairs};
use reid_core::cycle::{analyze_sequence, compute_fep, regulate_fep, regulate_fep_refined, Regulation};
use reid_core::feature::{extract_handcrafted, DEFAULT_KEEP};
use reid_core::metric::kissme::{fit_kissme, PairSet};
use reid_core::metric::{fit_pca, set_distance_avg, set_distance_min, Euclidean};
use reid_core::{run_evaluation, EvalConfig, Handcrafted};

fn cycles(c: &mut Criterion) {
    let data = dataset(2);
    let seq = &data.sequences()[0];
    let raw = compute_fep(seq).raw;
    c.bench_function("fep_64_frames", |b| b.iter(|| compute_fep(black_box(seq))));
    c.bench_function("regulate_dft", |b| b.iter(|| regulate_fep(black_box(&raw), DEFAULT_KEEP)));
    c.bench_function("regulate_refined", |b| b.iter(|| regulate_fep_refined(black_box(&raw), DEFAULT_KEEP)));
    c.bench_function("analyze_sequence", |b| {
        b.iter(|| analyze_sequence(black_box(seq), Regulation::default(), DEFAULT_KEEP))
    });
}

fn features(c: &mut Criterion) {
    let data = dataset(1);
    let frame = &data.sequences()[0].frames()[0];
    c.bench_function("handcrafted_32x64", |b| b.iter(|| extract_handcrafted(black_box(frame))));
}

fn metric(c: &mut Criterion) {
    let x = gaussian_rows(6, 100, 1);
    let y = gaussian_rows(6, 100, 2);
    c.bench_function("set_distance_min_6x6", |b| b.iter(|| set_distance_min(&x, &y, &Euclidean)));
    c.bench_function("set_distance_avg_6x6", |b| b.iter(|| set_distance_avg(&x, &y, &Euclidean)));

    let sim = scaled_pairs(2000, 0.5, 100, 3);
    let dis = scaled_pairs(2000, 2.0, 100, 4);
    c.bench_function("kissme_100d_2000_pairs", |b| {
        b.iter(|| {
            let pairs = PairSet {
                similar: sim.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect(),
                dissimilar: dis.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect(),
            };
            fit_kissme(&pairs)
        })
    });

    let rows = gaussian_rows(200, 480, 5);
    c.bench_function("pca_480_to_100", |b| b.iter(|| fit_pca(black_box(&rows), 100)));
}

fn evaluation(c: &mut Criterion) {
    let data = dataset(20);
    let config = EvalConfig {
        trials: 1,
        ..EvalConfig::default()
    };
    let mut group = c.benchmark_group("evaluation");
    group.sample_size(10);
    group.bench_function("one_trial_20_identities", |b| {
        b.iter(|| run_evaluation(&data, &config, &Handcrafted))
    });
    group.finish();
}

criterion_group!(benches, cycles, features, metric, evaluation);
criterion_main!(benches);
