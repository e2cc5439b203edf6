use algoboard_bench::{dataset, level0, space, x_problem};
use algoboard_core::decoder::kalman_filter;
use algoboard_core::galton::{simulate_board, simulate_board_direct, BoardConfig};
use algoboard_core::spectra::estimate_psd;
use algoboard_core::{correct_recursive, Axis, CorrectionConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn kalman(c: &mut Criterion) {
    let mut group = c.benchmark_group("kalman_filter");
    for k in [2_000, 20_000] {
        let ds = dataset(k, 46);
        let (obs, params) = x_problem(&ds);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| kalman_filter(black_box(&obs), black_box(&params)).unwrap())
        });
    }
    group.finish();
}

fn correction(c: &mut Criterion) {
    let ds = dataset(20_000, 46);
    let pred = level0(&ds);
    let truth = ds.trajectory(Axis::X);
    let mut group = c.benchmark_group("correct_recursive");
    for levels in [1, 5, 20] {
        let cfg = CorrectionConfig::static_levels(levels);
        group.bench_with_input(BenchmarkId::from_parameter(levels), &levels, |b, _| {
            b.iter(|| correct_recursive(black_box(&pred), truth, &space(), &cfg, None).unwrap())
        });
    }
    group.finish();
}

fn psd(c: &mut Criterion) {
    let ds = dataset(20_000, 2);
    let series = ds.trajectory(Axis::X).positions().to_vec();
    c.bench_function("estimate_psd/20000", |b| {
        b.iter(|| estimate_psd(black_box(&series), 256, 0.5).unwrap())
    });
}

fn galton(c: &mut Criterion) {
    let board = BoardConfig { rows: 12, balls: 100_000, right_prob: 0.5, seed: 0 };
    let mut group = c.benchmark_group("simulate_board");
    group.sample_size(20);
    group.bench_function("ball_by_ball", |b| b.iter(|| simulate_board(black_box(&board)).unwrap()));
    group.bench_function("direct", |b| b.iter(|| simulate_board_direct(black_box(&board)).unwrap()));
    group.finish();
}

criterion_group!(benches, kalman, correction, psd, galton);
criterion_main!(benches);
