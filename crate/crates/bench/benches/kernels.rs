use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use kirchhoff_core::discretization::{neg_laplacian, solve_shifted, Field, Mesh};
use kirchhoff_core::evolution::{simulate, step, Scheme, TimeStepConfig};
use kirchhoff_core::functionals::{energy_j, nehari_project, sobolev_constant, ModelParams};
use kirchhoff_core::stationary::{ground_state, GroundStateConfig};

fn params() -> ModelParams {
    ModelParams::new(1.0, 1.0, 5.0, 1).unwrap()
}

fn sine(n: usize) -> Field {
    Field::from_fn(Mesh::unit_interval(n).unwrap(), |x, _| (PI * x).sin())
}

fn operators(c: &mut Criterion) {
    let u = sine(255);
    let p = params();
    c.bench_function("neg_laplacian_255", |b| {
        b.iter(|| neg_laplacian(black_box(&u)))
    });
    c.bench_function("energy_j_255", |b| b.iter(|| energy_j(black_box(&u), &p)));
    c.bench_function("thomas_solve_255", |b| {
        b.iter(|| solve_shifted(black_box(&u), 1e4, 1.0).unwrap())
    });
    let m2 = Mesh::rectangle(1.0, 1.0, 63, 63).unwrap();
    let u2 = Field::from_fn(m2, |x, y| (PI * x).sin() * (PI * y).sin());
    c.bench_function("cg_solve_63x63", |b| {
        b.iter(|| solve_shifted(black_box(&u2), 1e3, 1.0).unwrap())
    });
    c.bench_function("nehari_project_255", |b| {
        b.iter(|| nehari_project(black_box(&u), &p).unwrap())
    });
}

fn time_stepping(c: &mut Criterion) {
    let p = params();
    let u = sine(255).scaled(1e-3);
    for scheme in [Scheme::SemiImplicit, Scheme::FullyImplicit] {
        c.bench_function(&format!("step_{scheme:?}_255"), |b| {
            b.iter(|| step(black_box(&u), 1e-4, &p, scheme).unwrap())
        });
    }
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("decay_1000_steps_255", |b| {
        b.iter_batched(
            || TimeStepConfig::new(1e-4, 0.1),
            |cfg| simulate(&u, &p, &cfg).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn variational(c: &mut Criterion) {
    let p = params();
    let m = Mesh::unit_interval(255).unwrap();
    let mut group = c.benchmark_group("variational");
    group.sample_size(10);
    group.bench_function("ground_state_8_starts_255", |b| {
        b.iter(|| ground_state(&m, &p, &GroundStateConfig::default()).unwrap())
    });
    group.bench_function("sobolev_constant_255", |b| {
        b.iter(|| sobolev_constant(&m, 5.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, operators, time_stepping, variational);
criterion_main!(benches);
