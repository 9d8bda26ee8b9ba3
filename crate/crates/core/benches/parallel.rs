//! Sequential vs rayon execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nlslab::diagnostics::{functional_i, CutoffSpec};
use nlslab::free::{free_evolve_batch, PropagatorForm};
use nlslab::integrator::{integrate, StepConfig};
use nlslab::nonlinearity::{verify_a1, NonlinearitySpec};
use nlslab::par::{self, Exec};
use nlslab::{Field, GridSpec, Trajectory, C64};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn gaussian(grid: GridSpec) -> Field {
    Field::from_fn(grid, |[x, y]| C64::new((-(x * x + y * y) / 2.0).exp(), 0.0))
}

fn kernels(c: &mut Criterion) {
    let u0 = gaussian(GridSpec::new(1, 4096, 320.0).unwrap());
    let times: Vec<f64> = (1..=64).map(|k| k as f64).collect();
    let traj = Trajectory::sample(
        &[0.0].iter().chain(&times).copied().collect::<Vec<_>>(),
        |t| nlslab::free::free_evolve(&u0, t, PropagatorForm::Multiplier),
    )
    .unwrap();
    let cutoff = CutoffSpec::for_power(8.0, 2.0).unwrap();
    let u2 = gaussian(GridSpec::new(2, 256, 24.0).unwrap());
    let gauge = NonlinearitySpec::gauge_invariant(3.0, 1.0);
    let step = StepConfig::new(0.01, 0.2, 10);
    let pure = NonlinearitySpec::pure_power(2.0, C64::new(1.0, 0.0));

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (name, mode) in MODES {
        par::set_exec(mode);
        group.bench_with_input(
            BenchmarkId::new("free_evolve_batch_64", name),
            &u0,
            |b, u| {
                b.iter(|| {
                    black_box(free_evolve_batch(u, &times, PropagatorForm::Multiplier).unwrap())
                })
            },
        );
        group.bench_with_input(BenchmarkId::new("functional_i", name), &traj, |b, tr| {
            b.iter(|| black_box(functional_i(tr, &cutoff, None).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("integrate_2d_gauge", name), &u2, |b, u| {
            b.iter(|| black_box(integrate(u, &gauge, &step).unwrap()))
        });
        group.bench_function(BenchmarkId::new("verify_a1_100k", name), |b| {
            b.iter(|| black_box(verify_a1(&pure, 100_000, 10.0, 1).unwrap()))
        });
    }
    par::set_exec(Exec::Parallel);
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
