use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use holoseries::models;
use holoseries::series::{calibrate_eta, default_probes};
use holoseries::{
    build_generator, g_sequence, h_sequence, mc_char_fn, q_series_eval, simulate_paths,
    solve_riccati, EvalOptions, SDEModel,
};

fn sequences(c: &mut Criterion) {
    let ou = build_generator(&models::ornstein_uhlenbeck(1.0, 2.0)).unwrap();
    let heston = build_generator(&models::heston(1.0, 0.04, 0.3, -0.7)).unwrap();
    c.bench_function("g_sequence ou r=100", |b| {
        b.iter(|| g_sequence(&ou, black_box(&[1.5]), 100).unwrap())
    });
    c.bench_function("h_sequence ou r=300", |b| {
        b.iter(|| h_sequence(&ou, black_box(&[1.5]), 2.0, 300).unwrap())
    });
    c.bench_function("h_sequence heston r=40", |b| {
        b.iter(|| h_sequence(&heston, black_box(&[1.0, -0.5]), 2.0, 40).unwrap())
    });
    c.bench_function("calibrate_eta ou r=300", |b| {
        let probes = default_probes(&ou);
        b.iter(|| calibrate_eta(&ou, black_box(&[1.5]), 1.0, &probes, 300).unwrap())
    });
}

fn evaluation(c: &mut Criterion) {
    let cir = build_generator(&models::square_root(1.0, 0.5, 0.5)).unwrap();
    let h = h_sequence(&cir, &[2.0], 2.0, 300).unwrap();
    let opts = EvalOptions::default();
    c.bench_function("q_series_eval cir", |b| {
        b.iter(|| q_series_eval(&h, black_box(&[0.4]), 1.0, &opts).unwrap())
    });
    c.bench_function("solve_riccati cir s=2", |b| {
        b.iter(|| solve_riccati(&cir, black_box(&[2.0]), 2.0, 1e-9).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let model = SDEModel::from_spec(&models::compound_poisson(0.5, 1.0)).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("compound_poisson 10k paths", |b| {
        b.iter(|| {
            let sim = simulate_paths(&model, &[0.0], 1.0, 10_000, 1.0 / 64.0, 7).unwrap();
            mc_char_fn(&sim, black_box(&[1.0])).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, sequences, evaluation, monte_carlo);
criterion_main!(benches);
