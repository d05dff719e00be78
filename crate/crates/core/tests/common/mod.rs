#![allow(dead_code)]

use mfg_prox::{MfgModel, Policy, RewardModel, TransitionKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive probability vector.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_policy(rng: &mut ChaCha8Rng, horizon: usize, ns: usize, na: usize) -> Policy {
    Policy::from_fn(horizon, ns, na, |_, _| simplex(rng, na)).unwrap()
}

/// Random instance with rewards in [0, 1] that ignore the population.
pub fn random_model(rng: &mut ChaCha8Rng, horizon: usize, ns: usize, na: usize) -> MfgModel {
    let coeffs: Vec<f64> = (0..horizon * ns * na).map(|_| rng.random_range(0.0..1.0)).collect();
    random_model_with(rng, horizon, ns, na, coeffs, false)
}

/// Random instance whose reward includes the −log μ crowd term.
pub fn random_crowd_model(rng: &mut ChaCha8Rng, horizon: usize, ns: usize, na: usize) -> MfgModel {
    let coeffs: Vec<f64> = (0..horizon * ns * na).map(|_| rng.random_range(-1.0..1.0)).collect();
    random_model_with(rng, horizon, ns, na, coeffs, true)
}

fn random_model_with(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    ns: usize,
    na: usize,
    coeffs: Vec<f64>,
    crowd: bool,
) -> MfgModel {
    let kernel = TransitionKernel::from_fn(horizon, ns, na, |_, _, _| simplex(rng, ns)).unwrap();
    let reward = RewardModel::table(horizon, ns, na, coeffs, crowd, 1e-9).unwrap();
    let init = simplex(rng, ns);
    MfgModel::new(kernel, reward, init).unwrap()
}

/// Small instance for brute-force checks: |S| ≤ 3, |A| ≤ 2, 2 ≤ H ≤ 3.
pub fn random_small(rng: &mut ChaCha8Rng) -> MfgModel {
    let horizon = rng.random_range(2..=3);
    let ns = rng.random_range(1..=3);
    let na = rng.random_range(1..=2);
    if rng.random_bool(0.5) {
        random_crowd_model(rng, horizon, ns, na)
    } else {
        random_model(rng, horizon, ns, na)
    }
}
