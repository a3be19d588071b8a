//! Data-parallel kernels on a one-thread pool against the default pool.
//! Built without the `parallel` feature both variants run sequentially.

use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cremer_core::angle::periodic_angles;
use cremer_core::poly::periodic_points;
use cremer_core::potential::sublevel_component;
use cremer_core::ray::{trace_angle_set, PotentialGrid};
use cremer_core::{Angle, Complex64, Polynomial};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn kernels(c: &mut Criterion) {
    let basilica = Polynomial::quadratic(Complex64::new(-1.0, 0.0));
    let angles: BTreeSet<Angle> = periodic_angles(2, 8).unwrap().into_iter().collect();
    let grid = PotentialGrid::standard(&basilica);

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new("periodic_points_n10", name), |b| {
            b.iter(|| pool.install(|| periodic_points(black_box(&basilica), 10).unwrap()))
        });
        group.bench_function(BenchmarkId::new("sublevel_component_h0.005", name), |b| {
            b.iter(|| pool.install(|| sublevel_component(&basilica, black_box(0.3), Complex64::new(0.0, 0.0), 0.005).unwrap()))
        });
        group.bench_function(BenchmarkId::new("trace_255_rays", name), |b| {
            b.iter(|| pool.install(|| trace_angle_set(&basilica, black_box(&angles), &grid).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
