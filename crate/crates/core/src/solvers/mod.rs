//! Regularized mirror descent (RMD) and the proximal point outer loop.
//!
//! One RMD step against anchor σ with weight λ and learning rate η replaces
//! every row of the policy by
//!
//! ```text
//! π'_h(a|s) ∝ σ_h(a|s)^{λη} · π_h(a|s)^{1−λη} · exp(η Q_h(s, a))
//! ```
//!
//! where Q is the regularized state-action value of π under its own flow
//! m[π]. The product is formed in log-space and normalized with a
//! log-sum-exp, so rows that approach a simplex vertex do not underflow.
//!
//! The proximal point loop restarts RMD from its previous output and uses
//! that output as the new anchor. [`rmd_baseline`] keeps the anchor fixed at
//! the initial policy and serves as the comparison run.

mod mirror_flow;
mod step_size;
mod trace;

use std::borrow::Cow;
use std::time::Instant;

use crate::dynamics::{check_lambda, forward_flow, weighted_kl};
use crate::error::{MfgError, Result};
use crate::evaluation::exploitability;
use crate::model::{MeanFieldFlow, MfgModel, Policy, DEFAULT_MU_FLOOR};
use crate::values::{backward_values, QTable};

pub use mirror_flow::{mirror_flow_integrate, mirror_flow_integrate_sampled, MirrorFlowPath};
pub use step_size::{eta_star, EtaStar};
pub use trace::{ConvergenceTrace, TraceRecord};

/// Hyperparameters of [`rmd_solve`], [`pp_solve`] and [`rmd_baseline`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight λ of the KL term toward the anchor.
    pub lambda: f64,
    /// Learning rate η.
    pub eta: f64,
    /// RMD steps per call (τ). Zero leaves the policy unchanged.
    pub inner_iters: usize,
    /// Outer iterations (N).
    pub outer_iters: usize,
    /// Clamp used inside logarithmic crowd rewards.
    pub mu_floor: f64,
    /// Keep every `record_every`-th inner record; the last step of each call is always kept.
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            eta: 0.1,
            inner_iters: 100,
            outer_iters: 20,
            mu_floor: DEFAULT_MU_FLOOR,
            record_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(MfgError::InvalidParameter {
                name: "lambda",
                reason: format!("must be positive, got {}", self.lambda),
            });
        }
        check_rates(self.lambda, self.eta)?;
        if self.record_every == 0 {
            return Err(MfgError::InvalidParameter {
                name: "record_every",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.mu_floor.is_finite() && self.mu_floor > 0.0) {
            return Err(MfgError::InvalidParameter {
                name: "mu_floor",
                reason: format!("must be positive, got {}", self.mu_floor),
            });
        }
        Ok(())
    }

    /// The model with this configuration's reward floor.
    fn prepare<'m>(&self, model: &'m MfgModel) -> Result<Cow<'m, MfgModel>> {
        self.validate()?;
        if model.reward().mu_floor() == self.mu_floor {
            Ok(Cow::Borrowed(model))
        } else {
            let reward = model.reward().clone().with_mu_floor(self.mu_floor)?;
            Ok(Cow::Owned(model.with_reward(reward)?))
        }
    }
}

fn check_rates(lambda: f64, eta: f64) -> Result<()> {
    check_lambda(lambda)?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(MfgError::InvalidParameter {
            name: "eta",
            reason: format!("must be positive, got {eta}"),
        });
    }
    if lambda * eta >= 1.0 {
        return Err(MfgError::InvalidParameter {
            name: "eta",
            reason: format!("lambda * eta = {} must be below 1", lambda * eta),
        });
    }
    Ok(())
}

/// Everything computed while taking one RMD step.
#[derive(Clone, Debug)]
pub struct RmdStep {
    pub policy: Policy,
    /// m[π] of the input policy.
    pub flow: MeanFieldFlow,
    /// Q^{λ,σ} of the input policy under `flow`.
    pub values: QTable,
}

/// Closed-form multiplicative update of every row, in log-space.
fn multiplicative_update(old: &Policy, anchor: &Policy, values: &QTable, lambda: f64, eta: f64) -> Policy {
    let (horizon, ns, na) = (old.horizon(), old.num_states(), old.num_actions());
    let mix = lambda * eta;
    let mut probs = Vec::with_capacity(horizon * ns * na);
    let mut logits = vec![0.0; na];
    for h in 0..horizon {
        for s in 0..ns {
            let (pi, sigma, q) = (old.row(h, s), anchor.row(h, s), values.q_row(h, s));
            for a in 0..na {
                let anchor_term = if mix == 0.0 { 0.0 } else { mix * sigma[a].ln() };
                logits[a] = anchor_term + (1.0 - mix) * pi[a].ln() + eta * q[a];
            }
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let start = probs.len();
            let mut total = 0.0;
            for &x in &logits {
                let e = (x - top).exp();
                total += e;
                probs.push(e);
            }
            for p in &mut probs[start..] {
                *p /= total;
            }
        }
    }
    Policy::from_raw(horizon, ns, na, probs)
}

/// One RMD step, returning the intermediate flow and values as well.
pub fn rmd_step_detailed(model: &MfgModel, policy: &Policy, anchor: &Policy, lambda: f64, eta: f64) -> Result<RmdStep> {
    check_rates(lambda, eta)?;
    policy.require_full_support("policy")?;
    if lambda > 0.0 {
        anchor.require_full_support("anchor")?;
    }
    let flow = forward_flow(model, policy)?;
    let values = backward_values(model, &flow, policy, anchor, lambda)?;
    let next = multiplicative_update(policy, anchor, &values, lambda, eta);
    if next.as_slice().iter().any(|p| !p.is_finite()) {
        return Err(MfgError::NonFinite { what: "rmd step" });
    }
    Ok(RmdStep {
        policy: next,
        flow,
        values,
    })
}

/// π^{t+1} from π^t: flow m[π^t], values Q^{λ,σ}, then the multiplicative update.
pub fn rmd_step(model: &MfgModel, policy: &Policy, anchor: &Policy, lambda: f64, eta: f64) -> Result<Policy> {
    rmd_step_detailed(model, policy, anchor, lambda, eta).map(|step| step.policy)
}

/// Optimality residual of an RMD step.
///
/// The exact update satisfies, at every (h, s), that
/// `v(a) = η(Q_h(s,a) − λ log(new/σ)) − (1−λη) log(new/old)` is constant in
/// `a`. Returns the largest spread max_a v − min_a v over all (h, s), with Q
/// computed from `old_policy`.
pub fn rmd_first_order_residual(
    model: &MfgModel,
    old_policy: &Policy,
    new_policy: &Policy,
    anchor: &Policy,
    lambda: f64,
    eta: f64,
) -> Result<f64> {
    for (what, p) in [
        ("old policy", old_policy),
        ("new policy", new_policy),
        ("anchor", anchor),
    ] {
        p.check_shape(model)?;
        p.require_full_support(what)?;
    }
    let flow = forward_flow(model, old_policy)?;
    let values = backward_values(model, &flow, old_policy, anchor, lambda)?;
    Ok(residual_from_values(
        &values, old_policy, new_policy, anchor, lambda, eta,
    ))
}

fn residual_from_values(values: &QTable, old: &Policy, new: &Policy, anchor: &Policy, lambda: f64, eta: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for h in 0..old.horizon() {
        for s in 0..old.num_states() {
            let (o, n, sg, q) = (old.row(h, s), new.row(h, s), anchor.row(h, s), values.q_row(h, s));
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for a in 0..o.len() {
                let v = eta * (q[a] - lambda * (n[a] / sg[a]).ln()) - (1.0 - lambda * eta) * (n[a] / o[a]).ln();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            worst = worst.max(hi - lo);
        }
    }
    worst
}

/// Snapshot passed to solver observers after every executed RMD step.
pub struct StepEvent<'a> {
    pub outer_k: usize,
    /// One-based index of the step within its RMD call.
    pub inner_t: usize,
    pub old: &'a Policy,
    pub new: &'a Policy,
    pub anchor: &'a Policy,
    /// m[old].
    pub flow: &'a MeanFieldFlow,
    /// Q^{λ,σ} of `old`.
    pub values: &'a QTable,
    /// D_{m[old]}(new, old).
    pub kl_step: f64,
}

impl StepEvent<'_> {
    /// [`rmd_first_order_residual`] of this step, reusing the computed values.
    pub fn residual(&self, lambda: f64, eta: f64) -> f64 {
        residual_from_values(self.values, self.old, self.new, self.anchor, lambda, eta)
    }
}

struct Run<'a, F> {
    model: &'a MfgModel,
    config: &'a SolverConfig,
    clock: Instant,
    trace: ConvergenceTrace,
    observer: F,
}

impl<F: FnMut(&StepEvent<'_>)> Run<'_, F> {
    fn elapsed_ms(&self) -> f64 {
        self.clock.elapsed().as_secs_f64() * 1e3
    }

    /// τ RMD steps from `start` against `anchor`; exploitability is recorded on the final record.
    fn rmd(&mut self, start: Policy, anchor: &Policy, outer_k: usize) -> Result<Policy> {
        let (lambda, eta, tau) = (self.config.lambda, self.config.eta, self.config.inner_iters);
        let mut current = start;
        if tau == 0 {
            let e = exploitability(self.model, &current)?;
            let ms = self.elapsed_ms();
            self.trace.push(TraceRecord {
                outer_k,
                inner_t: 0,
                exploitability: Some(e),
                kl_step: None,
                wall_clock_ms: ms,
            });
            return Ok(current);
        }
        for t in 1..=tau {
            let step = rmd_step_detailed(self.model, &current, anchor, lambda, eta)?;
            if let Some((h, s, a)) = step.policy.first_zero() {
                return Err(MfgError::ZeroEntry {
                    what: "rmd iterate (underflow)",
                    h,
                    s,
                    a,
                });
            }
            let kl_step = weighted_kl(&step.flow, &step.policy, &current)?;
            (self.observer)(&StepEvent {
                outer_k,
                inner_t: t,
                old: &current,
                new: &step.policy,
                anchor,
                flow: &step.flow,
                values: &step.values,
                kl_step,
            });
            current = step.policy;
            let last = t == tau;
            if last || t % self.config.record_every == 0 {
                let e = if last {
                    Some(exploitability(self.model, &current)?)
                } else {
                    None
                };
                let ms = self.elapsed_ms();
                self.trace.push(TraceRecord {
                    outer_k,
                    inner_t: t,
                    exploitability: e,
                    kl_step: Some(kl_step),
                    wall_clock_ms: ms,
                });
            }
        }
        Ok(current)
    }
}

fn start_run<'a, F>(model: &'a MfgModel, config: &'a SolverConfig, observer: F) -> Run<'a, F> {
    Run {
        model,
        config,
        clock: Instant::now(),
        trace: ConvergenceTrace::default(),
        observer,
    }
}

fn check_start(model: &MfgModel, policy: &Policy, what: &'static str) -> Result<()> {
    policy.check_shape(model)?;
    policy.require_full_support(what)
}

/// τ = `config.inner_iters` RMD steps from `init` against a fixed `anchor`.
pub fn rmd_solve(
    model: &MfgModel,
    init: &Policy,
    anchor: &Policy,
    config: &SolverConfig,
) -> Result<(Policy, ConvergenceTrace)> {
    rmd_solve_observed(model, init, anchor, config, |_| {})
}

/// [`rmd_solve`] with a callback invoked after every step.
pub fn rmd_solve_observed<F>(
    model: &MfgModel,
    init: &Policy,
    anchor: &Policy,
    config: &SolverConfig,
    observer: F,
) -> Result<(Policy, ConvergenceTrace)>
where
    F: FnMut(&StepEvent<'_>),
{
    let model = config.prepare(model)?;
    check_start(&model, init, "init")?;
    check_start(&model, anchor, "anchor")?;
    let mut run = start_run(&model, config, observer);
    let out = run.rmd(init.clone(), anchor, 0)?;
    Ok((out, run.trace))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum AnchorMode {
    /// σ^{k+1} becomes the next anchor.
    Proximal,
    /// The anchor stays at the initial policy.
    Fixed,
}

fn outer_loop<F>(
    model: &MfgModel,
    init: &Policy,
    config: &SolverConfig,
    mode: AnchorMode,
    observer: F,
) -> Result<(Policy, ConvergenceTrace)>
where
    F: FnMut(&StepEvent<'_>),
{
    let model = config.prepare(model)?;
    check_start(&model, init, "init")?;
    let mut run = start_run(&model, config, observer);
    if config.outer_iters == 0 || config.inner_iters == 0 {
        let e = exploitability(&model, init)?;
        run.trace.push(TraceRecord {
            outer_k: 0,
            inner_t: 0,
            exploitability: Some(e),
            kl_step: None,
            wall_clock_ms: run.elapsed_ms(),
        });
        return Ok((init.clone(), run.trace));
    }
    let mut current = init.clone();
    for k in 0..config.outer_iters {
        current = match mode {
            AnchorMode::Proximal => {
                let anchor = current.clone();
                run.rmd(current, &anchor, k)?
            }
            AnchorMode::Fixed => run.rmd(current, init, k)?,
        };
    }
    Ok((current, run.trace))
}

/// Proximal point iteration: σ^{k+1} = RMD(σ^k, anchor σ^k, τ steps) for k < N.
///
/// The trace holds the inner step-KL records of every outer iteration, and
/// the last record of each carries the exploitability of σ^{k+1}. With N = 0
/// or τ = 0 the initial policy is returned with a single record.
pub fn pp_solve(model: &MfgModel, init: &Policy, config: &SolverConfig) -> Result<(Policy, ConvergenceTrace)> {
    outer_loop(model, init, config, AnchorMode::Proximal, |_| {})
}

pub fn pp_solve_observed<F>(
    model: &MfgModel,
    init: &Policy,
    config: &SolverConfig,
    observer: F,
) -> Result<(Policy, ConvergenceTrace)>
where
    F: FnMut(&StepEvent<'_>),
{
    outer_loop(model, init, config, AnchorMode::Proximal, observer)
}

/// RMD with the anchor held at `init` for N·τ steps, recording exploitability
/// every τ steps so that its trace lines up with [`pp_solve`].
pub fn rmd_baseline(model: &MfgModel, init: &Policy, config: &SolverConfig) -> Result<(Policy, ConvergenceTrace)> {
    outer_loop(model, init, config, AnchorMode::Fixed, |_| {})
}

pub fn rmd_baseline_observed<F>(
    model: &MfgModel,
    init: &Policy,
    config: &SolverConfig,
    observer: F,
) -> Result<(Policy, ConvergenceTrace)>
where
    F: FnMut(&StepEvent<'_>),
{
    outer_loop(model, init, config, AnchorMode::Fixed, observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{beach_bar_model, RewardModel, TransitionKernel};

    fn single_state(q_first: f64, q_second: f64) -> MfgModel {
        // Last-step rewards only, so Q at the final step equals the reward.
        let coeffs = vec![0.0, 0.0, q_first, q_second];
        let reward = RewardModel::table(2, 1, 2, coeffs, false, 1e-9).unwrap();
        MfgModel::new(TransitionKernel::identity(2, 1, 2), reward, vec![1.0]).unwrap()
    }

    #[test]
    fn softmax_by_hand() {
        let m = single_state(1.0, 0.0);
        let pi = Policy::uniform(2, 1, 2);
        let next = rmd_step(&m, &pi, &pi, 0.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((next.prob(1, 0, 0) - e / (e + 1.0)).abs() < 1e-15);
        assert!((next.prob(1, 0, 1) - 1.0 / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn flat_q_at_anchor_is_a_fixed_point() {
        let m = single_state(0.4, 0.4);
        let pi = Policy::from_flat(2, 1, 2, vec![0.3, 0.7, 0.6, 0.4]).unwrap();
        // Step 0 has Q = V_1 for both actions as well, since transitions are identity.
        let next = rmd_step(&m, &pi, &pi, 0.5, 0.5).unwrap();
        for (a, b) in next.as_slice().iter().zip(pi.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_mix_forgets_current_iterate() {
        let m = beach_bar_model(4, 3, 0.1, 1e-9).unwrap();
        let sigma = m.uniform_policy();
        let pi_a = Policy::from_fn(3, 4, 3, |_, s| {
            if s % 2 == 0 {
                vec![0.2, 0.3, 0.5]
            } else {
                vec![0.6, 0.3, 0.1]
            }
        })
        .unwrap();
        let pi_b = Policy::from_fn(3, 4, 3, |_, _| vec![0.1, 0.1, 0.8]).unwrap();
        let eta = 0.5;
        let lambda = (1.0 - 1e-12) / eta;
        let na = rmd_step_detailed(&m, &pi_a, &sigma, lambda, eta).unwrap();
        let nb = rmd_step_detailed(&m, &pi_b, &sigma, lambda, eta).unwrap();
        // Both equal σ·exp(ηQ) normalized for their own Q; check against that directly.
        for (step, out) in [(&na, &na.policy), (&nb, &nb.policy)] {
            for h in 0..3 {
                for s in 0..4 {
                    let q = step.values.q_row(h, s);
                    let w: Vec<f64> = q.iter().map(|x| (eta * x).exp() / 3.0).collect();
                    let t: f64 = w.iter().sum();
                    for (a, wa) in w.iter().enumerate() {
                        assert!((out.prob(h, s, a) - wa / t).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_rates_and_zero_entries() {
        let m = beach_bar_model(3, 2, 0.1, 1e-9).unwrap();
        let pi = m.uniform_policy();
        assert!(rmd_step(&m, &pi, &pi, 2.0, 0.5).is_err());
        assert!(rmd_step(&m, &pi, &pi, 0.1, 0.0).is_err());
        let hot = Policy::deterministic(2, 3, 3, &[0; 6]).unwrap();
        assert!(matches!(
            rmd_step(&m, &hot, &pi, 0.1, 0.1),
            Err(MfgError::ZeroEntry { .. })
        ));
        assert!(matches!(
            rmd_step(&m, &pi, &hot, 0.1, 0.1),
            Err(MfgError::ZeroEntry { .. })
        ));
    }

    #[test]
    fn residual_of_exact_and_stale_steps() {
        let m = single_state(1.0, 0.0);
        let pi = Policy::uniform(2, 1, 2);
        let next = rmd_step(&m, &pi, &pi, 0.2, 0.5).unwrap();
        assert!(rmd_first_order_residual(&m, &pi, &next, &pi, 0.2, 0.5).unwrap() <= 1e-12);
        // Staying put leaves the spread η(Q₀ − Q₁) = 0.5 at the last step.
        let stale = rmd_first_order_residual(&m, &pi, &pi, &pi, 0.2, 0.5).unwrap();
        assert!((stale - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_return_init() {
        let m = beach_bar_model(4, 3, 0.1, 1e-9).unwrap();
        let init = m.uniform_policy();
        let config = SolverConfig {
            inner_iters: 0,
            ..SolverConfig::default()
        };
        let (out, trace) = rmd_solve(&m, &init, &init, &config).unwrap();
        assert_eq!(out, init);
        assert_eq!(trace.records().len(), 1);
        assert_eq!(
            trace.records()[0].exploitability,
            Some(exploitability(&m, &init).unwrap())
        );
        let config = SolverConfig {
            outer_iters: 0,
            ..SolverConfig::default()
        };
        let (out, trace) = pp_solve(&m, &init, &config).unwrap();
        assert_eq!(out, init);
        assert_eq!(trace.exploitability_series().len(), 1);
    }

    #[test]
    fn record_stride_keeps_last_step() {
        let m = beach_bar_model(4, 3, 0.1, 1e-9).unwrap();
        let init = m.uniform_policy();
        let config = SolverConfig {
            inner_iters: 10,
            outer_iters: 3,
            record_every: 4,
            ..SolverConfig::default()
        };
        let (_, trace) = pp_solve(&m, &init, &config).unwrap();
        let keys: Vec<_> = trace.records().iter().map(|r| (r.outer_k, r.inner_t)).collect();
        assert_eq!(
            keys,
            vec![
                (0, 4),
                (0, 8),
                (0, 10),
                (1, 4),
                (1, 8),
                (1, 10),
                (2, 4),
                (2, 8),
                (2, 10)
            ]
        );
        assert_eq!(trace.exploitability_series().len(), 3);
    }

    #[test]
    fn config_floor_is_forwarded() {
        let m = beach_bar_model(4, 3, 0.1, 1e-9).unwrap();
        let init = m.uniform_policy();
        let base = SolverConfig {
            inner_iters: 5,
            outer_iters: 1,
            ..SolverConfig::default()
        };
        let (a, _) = rmd_solve(&m, &init, &init, &base).unwrap();
        let m2 = m.with_reward(RewardModel::beach_bar(1e-3).unwrap()).unwrap();
        let (b, _) = rmd_solve(&m2, &init, &init, &base).unwrap();
        // Flows stay near uniform, far above both floors.
        assert_eq!(a, b);
        assert!(SolverConfig { mu_floor: 0.0, ..base }.validate().is_err());
    }
}
