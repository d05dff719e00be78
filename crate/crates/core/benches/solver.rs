use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfg_prox::evaluation::brute_force_equilibrium_check_with;
use mfg_prox::model::check_weak_monotonicity_with;
use mfg_prox::*;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn batch_policies(model: &MfgModel, count: usize) -> Vec<Policy> {
    let (h, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
    (0..count)
        .map(|k| {
            Policy::from_fn(h, ns, na, |hh, s| {
                let raw: Vec<f64> = (0..na)
                    .map(|a| 1.0 + ((k + 3 * hh + 7 * s + 11 * a) % 5) as f64)
                    .collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / total).collect()
            })
            .unwrap()
        })
        .collect()
}

fn exploitability_batch(c: &mut Criterion) {
    let model = beach_bar_model(30, 20, 0.1, 1e-9).unwrap();
    let policies = batch_policies(&model, 64);
    let mut group = c.benchmark_group("exploitability_many");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| exploitability_many(black_box(&model), black_box(&policies), exec).unwrap())
        });
    }
    group.finish();
}

fn monotonicity_sampling(c: &mut Criterion) {
    let model = beach_bar_model(10, 10, 0.1, 1e-9).unwrap();
    let mut group = c.benchmark_group("check_weak_monotonicity");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| check_weak_monotonicity_with(black_box(&model), 1000, 7, exec))
        });
    }
    group.finish();
}

fn brute_force(c: &mut Criterion) {
    let model = beach_bar_model(3, 3, 0.1, 1e-9).unwrap();
    let pi = model.uniform_policy();
    let mut group = c.benchmark_group("brute_force_equilibrium_check");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| brute_force_equilibrium_check_with(black_box(&model), black_box(&pi), 1, exec).unwrap())
        });
    }
    group.finish();
}

fn proximal_point(c: &mut Criterion) {
    let model = beach_bar_model(10, 10, 0.1, 1e-9).unwrap();
    let config = SolverConfig {
        inner_iters: 100,
        outer_iters: 5,
        ..SolverConfig::default()
    };
    c.bench_function("pp_solve_beach_bar_500_steps", |b| {
        b.iter(|| pp_solve(black_box(&model), &model.uniform_policy(), &config).unwrap())
    });
}

criterion_group!(
    benches,
    exploitability_batch,
    monotonicity_sampling,
    brute_force,
    proximal_point
);
criterion_main!(benches);
