//! Continuous-time mirror flow, integrated with classical RK4.
//!
//! Integrates the centered replicator form
//!
//! ```text
//! dπ_h(a|s)/dt = π_h(a|s) (G_h(s,a) − Σ_b π_h(b|s) G_h(s,b)),
//! G_h(s,a)     = Q_h(s,a) − λ log(π_h(a|s) / σ_h(a|s)),
//! ```
//!
//! which keeps every row on the simplex. Q is recomputed from the current
//! policy and its own flow at every stage.

use crate::dynamics::forward_flow;
use crate::error::{MfgError, Result};
use crate::model::{MfgModel, Policy};
use crate::values::{advantage_quantity, backward_values};

/// Policies sampled along an integrated path.
#[derive(Clone, Debug, PartialEq)]
pub struct MirrorFlowPath {
    pub times: Vec<f64>,
    pub policies: Vec<Policy>,
}

impl MirrorFlowPath {
    pub fn last(&self) -> &Policy {
        self.policies.last().expect("path always holds the initial policy")
    }
}

fn velocity(model: &MfgModel, probs: &[f64], shape: &Policy, anchor: &Policy, lambda: f64) -> Result<Vec<f64>> {
    if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(MfgError::NonFinite {
            what: "mirror flow state",
        });
    }
    let policy = Policy::from_raw(shape.horizon(), shape.num_states(), shape.num_actions(), probs.to_vec());
    let flow = forward_flow(model, &policy)?;
    let values = backward_values(model, &flow, &policy, anchor, lambda)?;
    let g = advantage_quantity(&values, &policy, anchor, lambda)?;
    let na = shape.num_actions();
    let mut out = Vec::with_capacity(probs.len());
    for (pi, g) in probs.chunks(na).zip(g.as_slice().chunks(na)) {
        let mean: f64 = pi.iter().zip(g).map(|(p, x)| p * x).sum();
        out.extend(pi.iter().zip(g).map(|(p, x)| p * (x - mean)));
    }
    Ok(out)
}

fn axpy(base: &[f64], scale: f64, dir: &[f64]) -> Vec<f64> {
    base.iter().zip(dir).map(|(b, d)| b + scale * d).collect()
}

/// Integrates to `t_end` with step at most `dt`, sampling every step.
pub fn mirror_flow_integrate(
    model: &MfgModel,
    init: &Policy,
    anchor: &Policy,
    lambda: f64,
    dt: f64,
    t_end: f64,
) -> Result<MirrorFlowPath> {
    mirror_flow_integrate_sampled(model, init, anchor, lambda, dt, t_end, dt)
}

/// As [`mirror_flow_integrate`], keeping a sample roughly every
/// `sample_interval` time units. The initial and final policies are always kept.
///
/// The step count is ⌈t_end/dt⌉ and the step is t_end divided by that count.
pub fn mirror_flow_integrate_sampled(
    model: &MfgModel,
    init: &Policy,
    anchor: &Policy,
    lambda: f64,
    dt: f64,
    t_end: f64,
    sample_interval: f64,
) -> Result<MirrorFlowPath> {
    if !(dt > 0.0 && dt <= 1e-2) {
        return Err(MfgError::InvalidParameter {
            name: "dt",
            reason: format!("must lie in (0, 0.01], got {dt}"),
        });
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(MfgError::InvalidParameter {
            name: "t_end",
            reason: format!("must be positive, got {t_end}"),
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(MfgError::InvalidParameter {
            name: "lambda",
            reason: format!("must be positive, got {lambda}"),
        });
    }
    init.check_shape(model)?;
    anchor.check_shape(model)?;
    init.require_full_support("init")?;
    anchor.require_full_support("anchor")?;

    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let step = t_end / steps as f64;
    let stride = ((sample_interval / step).round() as usize).max(1);
    let na = init.num_actions();

    let mut state = init.as_slice().to_vec();
    let mut path = MirrorFlowPath {
        times: vec![0.0],
        policies: vec![init.clone()],
    };
    for n in 1..=steps {
        let k1 = velocity(model, &state, init, anchor, lambda)?;
        let k2 = velocity(model, &axpy(&state, step / 2.0, &k1), init, anchor, lambda)?;
        let k3 = velocity(model, &axpy(&state, step / 2.0, &k2), init, anchor, lambda)?;
        let k4 = velocity(model, &axpy(&state, step, &k3), init, anchor, lambda)?;
        for i in 0..state.len() {
            state[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for row in state.chunks_mut(na) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        if state.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(MfgError::NonFinite {
                what: "mirror flow state",
            });
        }
        if n % stride == 0 || n == steps {
            path.times.push(n as f64 * step);
            path.policies
                .push(Policy::from_raw(init.horizon(), init.num_states(), na, state.clone()));
        }
    }
    Ok(path)
}
