//! Regularized value functions by backward induction.
//!
//! For a fixed flow μ, policy π, anchor σ and weight λ ≥ 0:
//!
//! ```text
//! V_{H+1}(s)  = 0
//! Q_h(s, a)   = r_h(s, a, μ_h) + Σ_{s'} P_h(s'|s, a) V_{h+1}(s')
//! V_h(s)      = Σ_a π_h(a|s) Q_h(s, a) − λ KL(π_h(·|s) ‖ σ_h(·|s))
//! ```
//!
//! The KL penalty of step h enters V_h only. Q_h carries the penalties of the
//! later steps through V_{h+1} but never its own.

use crate::dynamics::{check_lambda, forward_flow, kl_row, regularized_reward};
use crate::error::{MfgError, Result};
use crate::model::{MeanFieldFlow, MfgModel, Policy};

/// Dense real table indexed `[h][s][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionTable {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl ActionTable {
    pub fn from_flat(horizon: usize, num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        let expected = horizon * num_states * num_actions;
        if values.len() != expected {
            return Err(MfgError::DimensionMismatch {
                what: "action table",
                expected,
                found: values.len(),
            });
        }
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            values,
        })
    }

    #[inline]
    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.values[(h * self.num_states + s) * self.num_actions + a]
    }

    #[inline]
    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

/// Q_h(s, a) for h = 1..H together with V_h(s) for h = 1..H+1.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    q: ActionTable,
    /// `[h][s]` for h in 0..=H; the last step is identically zero.
    v: Vec<f64>,
}

impl QTable {
    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q.get(h, s, a)
    }

    #[inline]
    pub fn q_row(&self, h: usize, s: usize) -> &[f64] {
        self.q.row(h, s)
    }

    /// V_h(s); `h == horizon` is the terminal zero step.
    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.q.num_states + s]
    }

    pub fn v_step(&self, h: usize) -> &[f64] {
        let ns = self.q.num_states;
        &self.v[h * ns..(h + 1) * ns]
    }

    pub fn q_table(&self) -> &ActionTable {
        &self.q
    }

    pub fn horizon(&self) -> usize {
        self.q.horizon
    }

    /// E_{s∼μ₁}[V₁(s)].
    pub fn initial_value(&self, initial: &[f64]) -> f64 {
        initial.iter().zip(self.v_step(0)).map(|(m, v)| m * v).sum()
    }
}

/// Backward induction for Q^{λ,σ} and V^{λ,σ} under a fixed flow.
pub fn backward_values(
    model: &MfgModel,
    mu: &MeanFieldFlow,
    policy: &Policy,
    anchor: &Policy,
    lambda: f64,
) -> Result<QTable> {
    check_lambda(lambda)?;
    mu.check_shape(model)?;
    policy.check_shape(model)?;
    anchor.check_shape(model)?;
    if lambda > 0.0 {
        anchor.require_full_support("anchor")?;
    }
    let (horizon, ns, na) = (model.horizon(), model.num_states(), model.num_actions());
    let kernel = model.transitions();
    let reward = model.reward();

    let mut q = vec![0.0; horizon * ns * na];
    let mut v = vec![0.0; (horizon + 1) * ns];
    for h in (0..horizon).rev() {
        let mu_h = mu.step(h);
        let (head, tail) = v.split_at_mut((h + 1) * ns);
        let v_next = &tail[..ns];
        let v_here = &mut head[h * ns..];
        for s in 0..ns {
            let q_row = &mut q[(h * ns + s) * na..(h * ns + s + 1) * na];
            for (a, qa) in q_row.iter_mut().enumerate() {
                let cont: f64 = kernel.next(h, s, a).iter().zip(v_next).map(|(p, w)| p * w).sum();
                *qa = reward.evaluate(h, s, a, mu_h) + cont;
            }
            let pi = policy.row(h, s);
            let mut value: f64 = pi.iter().zip(q_row.iter()).map(|(p, x)| p * x).sum();
            if lambda > 0.0 {
                let kl = kl_row(pi, anchor.row(h, s)).map_err(|a| MfgError::InfiniteDivergence { h, s, a })?;
                value -= lambda * kl;
            }
            v_here[s] = value;
        }
    }
    Ok(QTable {
        q: ActionTable {
            horizon,
            num_states: ns,
            num_actions: na,
            values: q,
        },
        v,
    })
}

/// |J^{λ,σ}(m[π], π) − E_{s∼μ₁}[V₁(s)]| with both sides computed independently.
pub fn consistency_check_j_equals_v(model: &MfgModel, policy: &Policy, anchor: &Policy, lambda: f64) -> Result<f64> {
    let flow = forward_flow(model, policy)?;
    let j = regularized_reward(model, &flow, policy, anchor, lambda)?;
    let table = backward_values(model, &flow, policy, anchor, lambda)?;
    Ok((j - table.initial_value(model.initial_distribution())).abs())
}

/// G_h(s, a) = Q_h(s, a) − λ log(π_h(a|s) / σ_h(a|s)).
pub fn advantage_quantity(qtable: &QTable, policy: &Policy, anchor: &Policy, lambda: f64) -> Result<ActionTable> {
    let q = qtable.q_table();
    for (what, p) in [("policy", policy), ("anchor", anchor)] {
        if p.horizon() != q.horizon || p.num_states() != q.num_states || p.num_actions() != q.num_actions {
            return Err(MfgError::DimensionMismatch {
                what: "advantage inputs",
                expected: q.values.len(),
                found: p.as_slice().len(),
            });
        }
        p.require_full_support(what)?;
    }
    let values = q
        .values
        .iter()
        .zip(policy.as_slice().iter().zip(anchor.as_slice()))
        .map(|(&qv, (&p, &s))| if lambda == 0.0 { qv } else { qv - lambda * (p / s).ln() })
        .collect();
    Ok(ActionTable {
        horizon: q.horizon,
        num_states: q.num_states,
        num_actions: q.num_actions,
        values,
    })
}
