//! Population flow, cumulative rewards and divergences.

use crate::error::{MfgError, Result};
use crate::model::{MeanFieldFlow, MfgModel, Policy};

/// State weights μ in the policy divergence D_μ(π, σ) = Σ_h E_{s∼μ_h} KL(π_h(s), σ_h(s)).
pub type DivergenceWeights = MeanFieldFlow;

/// m[π]: the state distributions induced by `policy` from the model's μ₁.
pub fn forward_flow(model: &MfgModel, policy: &Policy) -> Result<MeanFieldFlow> {
    policy.check_shape(model)?;
    let (horizon, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
    let kernel = model.transitions();
    let mut mass = Vec::with_capacity(horizon * ns);
    mass.extend_from_slice(model.initial_distribution());
    for h in 1..horizon {
        let mut next = vec![0.0; ns];
        let prev = &mass[(h - 1) * ns..h * ns];
        for (s, &m) in prev.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for a in 0..na {
                let w = m * policy.prob(h - 1, s, a);
                if w == 0.0 {
                    continue;
                }
                for (n, &p) in next.iter_mut().zip(kernel.next(h - 1, s, a)) {
                    *n += w * p;
                }
            }
        }
        mass.extend(next);
    }
    Ok(MeanFieldFlow::from_raw(horizon, ns, mass))
}

/// Σ_h Σ_{s,a} π_h(a|s) flow_h(s) r_h(s, a, μ_h), with `flow` supplied by the caller.
pub(crate) fn reward_along(model: &MfgModel, mu: &MeanFieldFlow, policy: &Policy, flow: &MeanFieldFlow) -> f64 {
    let reward = model.reward();
    let mut total = 0.0;
    for h in 0..model.horizon() {
        let mu_h = mu.step(h);
        for (s, &w) in flow.step(h).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = policy.row(h, s);
            let mut inner = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    inner += p * reward.evaluate(h, s, a, mu_h);
                }
            }
            total += w * inner;
        }
    }
    total
}

/// J(μ, π): expected cumulative reward of `policy` when the population follows `mu`.
///
/// The trajectory weights are always m[π], recomputed here; `mu` only enters
/// through the reward.
pub fn cumulative_reward(model: &MfgModel, mu: &MeanFieldFlow, policy: &Policy) -> Result<f64> {
    mu.check_shape(model)?;
    let flow = forward_flow(model, policy)?;
    Ok(reward_along(model, mu, policy, &flow))
}

/// J^{λ,σ}(μ, π) = J(μ, π) − λ D_{m[π]}(π, σ).
pub fn regularized_reward(
    model: &MfgModel,
    mu: &MeanFieldFlow,
    policy: &Policy,
    anchor: &Policy,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    mu.check_shape(model)?;
    anchor.check_shape(model)?;
    let flow = forward_flow(model, policy)?;
    let base = reward_along(model, mu, policy, &flow);
    if lambda == 0.0 {
        return Ok(base);
    }
    anchor.require_full_support("anchor")?;
    Ok(base - lambda * weighted_kl(&flow, policy, anchor)?)
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(MfgError::InvalidParameter {
            name: "lambda",
            reason: format!("must be finite and non-negative, got {lambda}"),
        })
    }
}

/// KL(p ‖ q) with 0·log(0/q) = 0. Returns the offending index when p > 0 = q.
pub fn kl_row(p: &[f64], q: &[f64]) -> std::result::Result<f64, usize> {
    let mut total = 0.0;
    for (a, (&pa, &qa)) in p.iter().zip(q).enumerate() {
        if pa > 0.0 {
            if qa <= 0.0 {
                return Err(a);
            }
            total += pa * (pa / qa).ln();
        }
    }
    Ok(total)
}

/// D_μ(π, σ) = Σ_h Σ_s μ_h(s) KL(π_h(·|s) ‖ σ_h(·|s)).
///
/// States with zero weight are skipped entirely, so σ may vanish there.
pub fn weighted_kl(weights: &DivergenceWeights, policy: &Policy, anchor: &Policy) -> Result<f64> {
    if weights.horizon() != policy.horizon() || anchor.horizon() != policy.horizon() {
        return Err(MfgError::DimensionMismatch {
            what: "divergence horizon",
            expected: policy.horizon(),
            found: if weights.horizon() != policy.horizon() {
                weights.horizon()
            } else {
                anchor.horizon()
            },
        });
    }
    if weights.num_states() != policy.num_states()
        || anchor.num_states() != policy.num_states()
        || anchor.num_actions() != policy.num_actions()
    {
        return Err(MfgError::DimensionMismatch {
            what: "divergence shape",
            expected: policy.num_states() * policy.num_actions(),
            found: anchor.num_states() * anchor.num_actions(),
        });
    }
    let mut total = 0.0;
    for h in 0..policy.horizon() {
        for (s, &w) in weights.step(h).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let kl =
                kl_row(policy.row(h, s), anchor.row(h, s)).map_err(|a| MfgError::InfiniteDivergence { h, s, a })?;
            total += w * kl;
        }
    }
    Ok(total)
}

/// Σ_x |p(x) − q(x)|, the ℓ₁ form (no factor 1/2).
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(MfgError::DimensionMismatch {
            what: "distribution length",
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}
