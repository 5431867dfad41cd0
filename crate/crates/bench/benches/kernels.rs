use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use s7flow::density::{estimate_density, GridSpec};
use s7flow::linalg::expm;
use s7flow::rng::path_rng;
use s7flow::sde::{heun_stratonovich_step, simulate_ensemble};
use s7flow::{EnsembleSpec, Scheme, SdeProblem, SkewGenerator, SpherePoint};

fn bench_expm(c: &mut Criterion) {
    let m = *SkewGenerator::plane(1, 5).matrix() * 0.3;
    c.bench_function("expm_8x8", |b| b.iter(|| expm(black_box(&m))));
}

fn bench_heun_step(c: &mut Criterion) {
    let p = SdeProblem::brownian_motion(SpherePoint::basis(1));
    let z = SpherePoint::random(&mut path_rng(1, 0));
    let dw = [0.01, -0.02, 0.005, 0.0, 0.03, -0.01, 0.02];
    c.bench_function("heun_step_brownian", |b| {
        b.iter(|| heun_stratonovich_step(black_box(&p), black_box(&z), &dw, 1e-3))
    });
}

fn bench_ensemble(c: &mut Criterion) {
    let p = SdeProblem::brownian_motion(SpherePoint::basis(1));
    let spec = EnsembleSpec::new(1000, 100, 1e-3, 7, Scheme::Heun);
    let mut g = c.benchmark_group("ensemble");
    g.sample_size(20);
    g.bench_function("brownian_1000x100", |b| {
        b.iter(|| simulate_ensemble(&p, black_box(&spec)).unwrap())
    });
    g.finish();
}

fn bench_density(c: &mut Criterion) {
    let grid = GridSpec::uniform(3, 6).unwrap();
    let pts: Vec<SpherePoint> = (0..100_000)
        .map(|i| SpherePoint::random(&mut path_rng(3, i)))
        .collect();
    c.bench_function("density_100k", |b| {
        b.iter_batched(
            || pts.clone(),
            |s| estimate_density(&s, &grid).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(
    benches,
    bench_expm,
    bench_heun_step,
    bench_ensemble,
    bench_density
);
criterion_main!(benches);
