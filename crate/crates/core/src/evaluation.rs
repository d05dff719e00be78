//! Best responses, exploitability and equilibrium diagnostics.

use crate::dynamics::{cumulative_reward, forward_flow, reward_along};
use crate::error::{MfgError, Result};
use crate::model::{MeanFieldFlow, MfgModel, Policy};
use crate::par::Execution;

/// Upper bound on the candidate count of [`brute_force_equilibrium_check`].
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponseResult {
    /// Deterministic; every row is one-hot.
    pub policy: Policy,
    /// max_{π′} J(μ, π′) for the fixed flow μ.
    pub value: f64,
}

/// Optimal deterministic policy against a fixed population flow.
///
/// Plain backward induction on the MDP obtained by freezing `mu` in the
/// reward. Ties go to the lowest action index.
pub fn best_response(model: &MfgModel, mu: &MeanFieldFlow) -> Result<BestResponseResult> {
    mu.check_shape(model)?;
    let (horizon, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
    let kernel = model.transitions();
    let reward = model.reward();
    let mut v_next = vec![0.0; ns];
    let mut actions = vec![0usize; horizon * ns];
    for h in (0..horizon).rev() {
        let mu_h = mu.step(h);
        let mut v_here = vec![0.0; ns];
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for a in 0..na {
                let cont: f64 = kernel.next(h, s, a).iter().zip(&v_next).map(|(p, v)| p * v).sum();
                let q = reward.evaluate(h, s, a, mu_h) + cont;
                if q > best {
                    best = q;
                    arg = a;
                }
            }
            v_here[s] = best;
            actions[h * ns + s] = arg;
        }
        v_next = v_here;
    }
    let value = model
        .initial_distribution()
        .iter()
        .zip(&v_next)
        .map(|(m, v)| m * v)
        .sum();
    Ok(BestResponseResult {
        policy: Policy::deterministic(horizon, ns, na, &actions)?,
        value,
    })
}

/// max_{π′} J(m[π], π′) − J(m[π], π).
pub fn exploitability(model: &MfgModel, policy: &Policy) -> Result<f64> {
    let flow = forward_flow(model, policy)?;
    let br = best_response(model, &flow)?;
    Ok(br.value - reward_along(model, &flow, policy, &flow))
}

/// Exploitability of a batch of policies, in input order.
pub fn exploitability_many(model: &MfgModel, policies: &[Policy], exec: Execution) -> Result<Vec<f64>> {
    exec.map_slice(policies, |p| exploitability(model, p))
        .into_iter()
        .collect()
}

/// min over `reference_set` of Σ_{h,s} ‖π_h(·|s) − π*_h(·|s)‖₁.
pub fn distance_to_policy_set(policy: &Policy, reference_set: &[Policy]) -> Result<f64> {
    if reference_set.is_empty() {
        return Err(MfgError::InvalidParameter {
            name: "reference_set",
            reason: "must not be empty".into(),
        });
    }
    let mut best = f64::INFINITY;
    for reference in reference_set {
        if reference.as_slice().len() != policy.as_slice().len()
            || reference.num_actions() != policy.num_actions()
            || reference.horizon() != policy.horizon()
        {
            return Err(MfgError::DimensionMismatch {
                what: "reference policy",
                expected: policy.as_slice().len(),
                found: reference.as_slice().len(),
            });
        }
        let d: f64 = policy
            .as_slice()
            .iter()
            .zip(reference.as_slice())
            .map(|(a, b)| (a - b).abs())
            .sum();
        best = best.min(d);
    }
    Ok(best)
}

/// Points of the probability simplex over `dim` outcomes whose coordinates are multiples of 1/resolution.
fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn fill(remaining: usize, slot: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot + 1 == current.len() {
            current[slot] = remaining;
            out.push(current.clone());
            return;
        }
        for k in (0..=remaining).rev() {
            current[slot] = k;
            fill(remaining - k, slot + 1, current, out);
        }
    }
    let mut counts = Vec::new();
    fill(resolution, 0, &mut vec![0; dim], &mut counts);
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / resolution as f64).collect())
        .collect()
}

/// Exhaustive deviation search: the largest gain J(m[π], π′) − J(m[π], π)
/// over every policy π′ whose rows lie on the simplex grid of the given
/// resolution. Resolution 1 enumerates the deterministic policies, which is
/// enough to recover the exploitability exactly.
pub fn brute_force_equilibrium_check(model: &MfgModel, policy: &Policy, grid_resolution: usize) -> Result<f64> {
    brute_force_equilibrium_check_with(model, policy, grid_resolution, Execution::default())
}

pub fn brute_force_equilibrium_check_with(
    model: &MfgModel,
    policy: &Policy,
    grid_resolution: usize,
    exec: Execution,
) -> Result<f64> {
    if grid_resolution == 0 {
        return Err(MfgError::InvalidParameter {
            name: "grid_resolution",
            reason: "must be at least 1".into(),
        });
    }
    let (horizon, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
    let rows = simplex_grid(na, grid_resolution);
    let cells = horizon * ns;
    let candidates = (rows.len() as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    if candidates > BRUTE_FORCE_LIMIT {
        return Err(MfgError::TooLarge {
            candidates,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let mu = forward_flow(model, policy)?;
    let baseline = cumulative_reward(model, &mu, policy)?;
    let radix = rows.len();
    let gains = exec.map(candidates as usize, |index| -> Result<f64> {
        let mut probs = Vec::with_capacity(cells * na);
        let mut rest = index;
        for _ in 0..cells {
            probs.extend_from_slice(&rows[rest % radix]);
            rest /= radix;
        }
        let deviation = Policy::from_raw(horizon, ns, na, probs);
        Ok(cumulative_reward(model, &mu, &deviation)? - baseline)
    });
    let mut best = f64::NEG_INFINITY;
    for gain in gains {
        best = best.max(gain?);
    }
    Ok(best)
}
