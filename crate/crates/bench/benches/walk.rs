use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use qwloc_core::detect::{coarse_grid, SweepGrid};
use qwloc_core::ml::{generate_training_set, train_svm, SvmParams, TrainingBands};
use qwloc_core::observables::IprVariant;
use qwloc_core::randomness::evolve_final;
use qwloc_core::walk::{coin_matrix, initial_state};
use qwloc_core::{CoinParams, Direction, ModelKind, WalkConfig};

const THETA0: f64 = PI / 6.0;

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for n in [100usize, 490, 2000] {
        let coin = coin_matrix(CoinParams::new(THETA0)).unwrap();
        group.throughput(Throughput::Elements((2 * n + 1) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut state = initial_state(n).unwrap();
            let mut t = 0;
            b.iter(|| {
                // restart before the walker reaches the lattice edge
                if t == n {
                    state = initial_state(n).unwrap();
                    t = 0;
                }
                state.step_in_place(&coin, Direction::Forward).unwrap();
                t += 1;
            });
            black_box(&state);
        });
    }
    group.finish();
}

fn evolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve_final");
    group.sample_size(20);
    let cfg = WalkConfig::new(490, THETA0, 1).with_steps(400);
    for (name, model) in [
        ("clean", ModelKind::None.with_magnitude(0.0)),
        ("discrete_angle", ModelKind::DiscreteAngle.with_magnitude(0.1)),
        ("translation", ModelKind::RandomTranslation.with_magnitude(0.05)),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| evolve_final(black_box(&cfg), &model, IprVariant::PlusComponent).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let base = WalkConfig::new(490, THETA0, 1).with_steps(210);
    let grid = coarse_grid(THETA0, 50);
    group.bench_function("discrete_angle_50_points", |b| {
        b.iter(|| SweepGrid::generate(&base, ModelKind::DiscreteAngle, &grid, 0, IprVariant::PlusComponent).unwrap())
    });
    group.finish();
}

fn svm(c: &mut Criterion) {
    let mut group = c.benchmark_group("svm");
    group.sample_size(10);
    let base = WalkConfig::new(100, THETA0, 42);
    let bands = TrainingBands::deep(ModelKind::DiscreteAngle, THETA0, 0.02, 50).unwrap();
    let samples = generate_training_set(&base, ModelKind::DiscreteAngle, &bands, 1800, 42).unwrap();
    group.bench_function("train_1800", |b| b.iter(|| train_svm(&samples, &SvmParams::default(), 7).unwrap()));
    group.finish();
}

criterion_group!(benches, step, evolve, sweep, svm);
criterion_main!(benches);
