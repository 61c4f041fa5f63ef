use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hopleg::analytic::HopCycle;
use hopleg::metrics::summarize;
use hopleg::sim::run;
use hopleg::telemetry::to_csv;
use hopleg::HopperParams;
use hopleg_bench::{force_second, position_second};

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_one_second");
    g.sample_size(20);
    let force = force_second();
    let position = position_second();
    g.bench_function("force", |b| b.iter(|| run(black_box(&force)).unwrap()));
    g.bench_function("position", |b| {
        b.iter(|| run(black_box(&position)).unwrap())
    });
    g.finish();
}

fn post_processing(c: &mut Criterion) {
    let log = run(&force_second()).unwrap();
    c.bench_function("summarize", |b| b.iter(|| summarize(black_box(&log), None)));
    c.bench_function("telemetry_csv", |b| b.iter(|| to_csv(black_box(&log))));
}

fn reference(c: &mut Criterion) {
    let cycle = HopCycle::new(&HopperParams::physical()).unwrap();
    c.bench_function("reference_sample", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for k in 0..1000 {
                acc += cycle.sample(black_box(k as f64 * 3.1e-4)).y_des;
            }
            acc
        })
    });
}

criterion_group!(benches, simulation, post_processing, reference);
criterion_main!(benches);
