//! Microbenchmarks for the solver's hot paths: simplex projection, the
//! redundancy-rate bisection, one full solver iteration, and the inverse
//! Gaussian tail.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use isac_opt::numerics::q_inverse;
use isac_opt::projections::project_simplex;
use isac_opt::rng::substream;
use isac_opt::scenario::{generate_scenario, GeometryConfig, Sizes};
use isac_opt::solver::{run, SolverConfig};
use isac_opt::sop::{solve_redundancy_rate, BeamformerSet};
use isac_opt::SensingMetric;
use rand::Rng;

fn desk_scale() -> Sizes {
    Sizes {
        n_antennas: 8,
        n_users: 3,
        n_eves: 3,
        n_scatterers: 2,
    }
}

fn bench_simplex(c: &mut Criterion) {
    let mut rng = substream(1, "bench-simplex");
    let xs: Vec<Vec<f64>> = (0..64)
        .map(|_| (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    let mut k = 0usize;
    c.bench_function("project_simplex_dim8", |b| {
        b.iter(|| {
            k = (k + 1) % xs.len();
            black_box(project_simplex(&xs[k]).unwrap())
        })
    });
}

fn bench_redundancy_bisection(c: &mut Criterion) {
    let cfg = GeometryConfig {
        seed: 2,
        ..Default::default()
    };
    let scenario = generate_scenario(&cfg, desk_scale()).unwrap();
    let mut rng = substream(3, "bench-sop");
    let set =
        BeamformerSet::random_feasible(&mut rng, 8, 3, 0.9 * scenario.power_budget).unwrap();
    c.bench_function("solve_redundancy_rate", |b| {
        b.iter(|| black_box(solve_redundancy_rate(&set, 0, &scenario, 1e-10).unwrap()))
    });
}

fn bench_solver_iterations(c: &mut Criterion) {
    let cfg = GeometryConfig {
        seed: 4,
        ..Default::default()
    };
    let scenario = generate_scenario(&cfg, desk_scale()).unwrap();
    let metric = SensingMetric::Sinr { gamma: 10.0 };
    let config = SolverConfig {
        max_iters: 10,
        log_every: 10,
        ..Default::default()
    };
    c.bench_function("solver_10_iterations", |b| {
        b.iter(|| black_box(run(&scenario, &metric, &config).unwrap().best_obj))
    });
}

fn bench_q_inverse(c: &mut Criterion) {
    c.bench_function("q_inverse", |b| {
        b.iter(|| black_box(q_inverse(black_box(1e-3)).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_simplex,
    bench_redundancy_bisection,
    bench_solver_iterations,
    bench_q_inverse
);
criterion_main!(benches);
