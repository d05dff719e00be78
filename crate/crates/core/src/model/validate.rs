use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{MeanFieldFlow, MfgModel, Policy, SUM_TOLERANCE};
use crate::par::Execution;

/// A single failed model invariant. Indices are zero-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    HorizonTooShort {
        horizon: usize,
    },
    NegativeTransition {
        h: usize,
        s: usize,
        a: usize,
        next: usize,
        value: f64,
    },
    TransitionRowSum {
        h: usize,
        s: usize,
        a: usize,
        sum: f64,
    },
    /// No (s, a) has P_h(state | s, a) > 0.
    Unreachable {
        h: usize,
        state: usize,
    },
    NegativeInitial {
        state: usize,
        value: f64,
    },
    InitialSum {
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::HorizonTooShort { horizon } => write!(f, "horizon {horizon} < 2"),
            Violation::NegativeTransition { h, s, a, next, value } => {
                write!(f, "P[h={h}][s={s}][a={a}][{next}] = {value} is negative or non-finite")
            }
            Violation::TransitionRowSum { h, s, a, sum } => {
                write!(f, "P[h={h}][s={s}][a={a}] sums to {sum}")
            }
            Violation::Unreachable { h, state } => {
                write!(f, "state {state} is unreachable under P[h={h}]")
            }
            Violation::NegativeInitial { state, value } => {
                write!(
                    f,
                    "initial distribution entry {state} = {value} is negative or non-finite"
                )
            }
            Violation::InitialSum { sum } => write!(f, "initial distribution sums to {sum}"),
        }
    }
}

/// Checks the model's standing assumptions and returns every violation found.
///
/// Covers horizon ≥ 2, row-stochastic transitions, reachability of every
/// state at every step and a valid initial distribution.
pub fn validate_model(model: &MfgModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let (horizon, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
    if horizon < 2 {
        out.push(Violation::HorizonTooShort { horizon });
    }

    let kernel = model.transitions();
    for h in 0..horizon {
        let mut reached = vec![false; ns];
        for s in 0..ns {
            for a in 0..na {
                let row = kernel.next(h, s, a);
                let mut sum = 0.0;
                for (next, &p) in row.iter().enumerate() {
                    if !p.is_finite() || p < 0.0 {
                        out.push(Violation::NegativeTransition {
                            h,
                            s,
                            a,
                            next,
                            value: p,
                        });
                    }
                    if p > 0.0 {
                        reached[next] = true;
                    }
                    sum += p;
                }
                if !sum.is_finite() || (sum - 1.0).abs() > SUM_TOLERANCE {
                    out.push(Violation::TransitionRowSum { h, s, a, sum });
                }
            }
        }
        out.extend(
            reached
                .iter()
                .enumerate()
                .filter(|(_, &r)| !r)
                .map(|(state, _)| Violation::Unreachable { h, state }),
        );
    }

    let mut sum = 0.0;
    for (state, &value) in model.initial_distribution().iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            out.push(Violation::NegativeInitial { state, value });
        }
        sum += value;
    }
    if !sum.is_finite() || (sum - 1.0).abs() > SUM_TOLERANCE {
        out.push(Violation::InitialSum { sum });
    }
    out
}

/// Σ_{h,s,a} (r_h(s,a,μ_h) − r_h(s,a,μ̃_h)) (π_h(a|s) μ_h(s) − π̃_h(a|s) μ̃_h(s)).
///
/// Non-positive for every pair of arguments when the reward is weakly monotone.
pub fn monotonicity_sum(
    model: &MfgModel,
    mu: &MeanFieldFlow,
    policy: &Policy,
    mu_alt: &MeanFieldFlow,
    policy_alt: &Policy,
) -> f64 {
    let reward = model.reward();
    let mut total = 0.0;
    for h in 0..model.horizon() {
        let (m, m_alt) = (mu.step(h), mu_alt.step(h));
        for s in 0..model.num_states() {
            for a in 0..model.num_actions() {
                let dr = reward.evaluate(h, s, a, m) - reward.evaluate(h, s, a, m_alt);
                let dw = policy.prob(h, s, a) * m[s] - policy_alt.prob(h, s, a) * m_alt[s];
                total += dr * dw;
            }
        }
    }
    total
}

fn sample_simplex(rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<f64>) {
    let start = out.len();
    let mut total = 0.0;
    for _ in 0..n {
        let x: f64 = Exp1.sample(rng);
        total += x;
        out.push(x);
    }
    for x in &mut out[start..] {
        *x /= total;
    }
}

struct Sample {
    mu: MeanFieldFlow,
    policy: Policy,
    mu_alt: MeanFieldFlow,
    policy_alt: Policy,
}

fn draw(model: &MfgModel, rng: &mut ChaCha8Rng) -> Sample {
    let (horizon, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
    let flow = |rng: &mut ChaCha8Rng| {
        let mut mass = Vec::with_capacity(horizon * ns);
        for _ in 0..horizon {
            sample_simplex(rng, ns, &mut mass);
        }
        MeanFieldFlow::from_raw(horizon, ns, mass)
    };
    let mu = flow(rng);
    let mu_alt = flow(rng);
    let policy = |rng: &mut ChaCha8Rng| {
        let mut probs = Vec::with_capacity(horizon * ns * na);
        for _ in 0..horizon * ns {
            sample_simplex(rng, na, &mut probs);
        }
        Policy::from_raw(horizon, ns, na, probs)
    };
    let policy_a = policy(rng);
    let policy_b = policy(rng);
    Sample {
        mu,
        policy: policy_a,
        mu_alt,
        policy_alt: policy_b,
    }
}

/// Searches for a violation of weak monotonicity by uniform sampling.
///
/// Draws `num_samples` independent pairs (μ, π), (μ̃, π̃) with every simplex
/// factor uniform, and returns the largest [`monotonicity_sum`] observed. A
/// result ≤ 1e-10 means no violation was found. The result depends only on
/// `rng_seed`, not on the execution strategy.
pub fn check_weak_monotonicity(model: &MfgModel, num_samples: usize, rng_seed: u64) -> f64 {
    check_weak_monotonicity_with(model, num_samples, rng_seed, Execution::default())
}

pub fn check_weak_monotonicity_with(model: &MfgModel, num_samples: usize, rng_seed: u64, exec: Execution) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let samples: Vec<Sample> = (0..num_samples.max(1)).map(|_| draw(model, &mut rng)).collect();
    exec.map_slice(&samples, |x| {
        monotonicity_sum(model, &x.mu, &x.policy, &x.mu_alt, &x.policy_alt)
    })
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}
