//! Finite mean-field game instances.
//!
//! A model is the tuple (S, A, H, P, r, μ₁): finite state and action sets, a
//! horizon of `H` steps, a population-independent transition kernel per
//! step, a reward that may depend on the current state distribution, and the
//! initial state distribution. All tables are dense and indexed from zero, so
//! step `h` here is step `h + 1` in one-based notation.

mod beach_bar;
mod document;
mod validate;

use std::fmt;
use std::sync::Arc;

use crate::error::{MfgError, Result};

pub use beach_bar::{beach_bar_model, BEACH_BAR_ACTIONS};
pub use document::ModelDocument;
pub use validate::{
    check_weak_monotonicity, check_weak_monotonicity_with, monotonicity_sum, validate_model, Violation,
};

/// Tolerance on the total mass of every probability vector.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Default clamp applied to μ_h(s) before taking its logarithm in crowd rewards.
pub const DEFAULT_MU_FLOOR: f64 = 1e-9;

fn check_probability_vector(what: &'static str, index: &[usize], row: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(MfgError::InvalidDistribution {
                what,
                index: index.to_vec(),
                reason: format!("entry {p} is negative or non-finite"),
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(MfgError::InvalidDistribution {
            what,
            index: index.to_vec(),
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}

/// Time-indexed, state-conditioned action distributions π_h(·|s).
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        let p = 1.0 / num_actions as f64;
        Self {
            horizon,
            num_states,
            num_actions,
            probs: vec![p; horizon * num_states * num_actions],
        }
    }

    /// Builds a policy from a flat `[h][s][a]` table, checking every row.
    pub fn from_flat(horizon: usize, num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = horizon * num_states * num_actions;
        if probs.len() != expected {
            return Err(MfgError::DimensionMismatch {
                what: "policy table",
                expected,
                found: probs.len(),
            });
        }
        let policy = Self {
            horizon,
            num_states,
            num_actions,
            probs,
        };
        for h in 0..horizon {
            for s in 0..num_states {
                check_probability_vector("policy", &[h, s], policy.row(h, s))?;
            }
        }
        Ok(policy)
    }

    /// Builds a policy row by row.
    pub fn from_fn<F>(horizon: usize, num_states: usize, num_actions: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Vec<f64>,
    {
        let mut probs = Vec::with_capacity(horizon * num_states * num_actions);
        for h in 0..horizon {
            for s in 0..num_states {
                let row = f(h, s);
                if row.len() != num_actions {
                    return Err(MfgError::DimensionMismatch {
                        what: "policy row",
                        expected: num_actions,
                        found: row.len(),
                    });
                }
                probs.extend(row);
            }
        }
        Self::from_flat(horizon, num_states, num_actions, probs)
    }

    /// One-hot policy playing `actions[h * num_states + s]` at (h, s).
    pub fn deterministic(horizon: usize, num_states: usize, num_actions: usize, actions: &[usize]) -> Result<Self> {
        if actions.len() != horizon * num_states {
            return Err(MfgError::DimensionMismatch {
                what: "deterministic action table",
                expected: horizon * num_states,
                found: actions.len(),
            });
        }
        let mut probs = vec![0.0; horizon * num_states * num_actions];
        for (cell, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(MfgError::InvalidParameter {
                    name: "actions",
                    reason: format!("action {a} out of range at cell {cell}"),
                });
            }
            probs[cell * num_actions + a] = 1.0;
        }
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            probs,
        })
    }

    /// Rows are written without validation; callers guarantee normalization.
    pub(crate) fn from_raw(horizon: usize, num_states: usize, num_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), horizon * num_states * num_actions);
        Self {
            horizon,
            num_states,
            num_actions,
            probs,
        }
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

    #[inline]
    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.probs[start..start + self.num_actions]
    }

    #[inline]
    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// σ_min: the smallest entry over all (h, s, a).
    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// Location of the first zero entry, if any.
    pub fn first_zero(&self) -> Option<(usize, usize, usize)> {
        self.probs.iter().position(|&p| p <= 0.0).map(|i| {
            let a = i % self.num_actions;
            let cell = i / self.num_actions;
            (cell / self.num_states, cell % self.num_states, a)
        })
    }

    pub fn require_full_support(&self, what: &'static str) -> Result<()> {
        match self.first_zero() {
            None => Ok(()),
            Some((h, s, a)) => Err(MfgError::ZeroEntry { what, h, s, a }),
        }
    }

    /// Maximum over rows of |Σ_a π_h(a|s) − 1|.
    pub fn max_row_error(&self) -> f64 {
        self.probs
            .chunks(self.num_actions)
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_shape(&self, model: &MfgModel) -> Result<()> {
        check_dim("policy horizon", model.horizon, self.horizon)?;
        check_dim("policy states", model.num_states, self.num_states)?;
        check_dim("policy actions", model.num_actions, self.num_actions)
    }
}

/// Time-indexed state distributions μ_h, the population flow.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldFlow {
    horizon: usize,
    num_states: usize,
    mass: Vec<f64>,
}

impl MeanFieldFlow {
    pub fn from_flat(horizon: usize, num_states: usize, mass: Vec<f64>) -> Result<Self> {
        let expected = horizon * num_states;
        if mass.len() != expected {
            return Err(MfgError::DimensionMismatch {
                what: "flow table",
                expected,
                found: mass.len(),
            });
        }
        let flow = Self {
            horizon,
            num_states,
            mass,
        };
        for h in 0..horizon {
            check_probability_vector("flow", &[h], flow.step(h))?;
        }
        Ok(flow)
    }

    pub fn from_steps(steps: Vec<Vec<f64>>) -> Result<Self> {
        let horizon = steps.len();
        let num_states = steps.first().map_or(0, Vec::len);
        let mut mass = Vec::with_capacity(horizon * num_states);
        for step in steps {
            if step.len() != num_states {
                return Err(MfgError::DimensionMismatch {
                    what: "flow step",
                    expected: num_states,
                    found: step.len(),
                });
            }
            mass.extend(step);
        }
        Self::from_flat(horizon, num_states, mass)
    }

    pub fn constant(horizon: usize, distribution: &[f64]) -> Result<Self> {
        Self::from_steps(vec![distribution.to_vec(); horizon])
    }

    pub(crate) fn from_raw(horizon: usize, num_states: usize, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), horizon * num_states);
        Self {
            horizon,
            num_states,
            mass,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn step(&self, h: usize) -> &[f64] {
        &self.mass[h * self.num_states..(h + 1) * self.num_states]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    pub fn max_step_error(&self) -> f64 {
        self.mass
            .chunks(self.num_states)
            .map(|step| (step.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_shape(&self, model: &MfgModel) -> Result<()> {
        check_dim("flow horizon", model.horizon, self.horizon)?;
        check_dim("flow states", model.num_states, self.num_states)
    }
}

/// Dense transition table P_h(s′|s, a), indexed `[h][s][a][s′]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl TransitionKernel {
    /// Shape is checked here; stochasticity is left to [`validate_model`].
    pub fn from_flat(horizon: usize, num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = horizon * num_states * num_actions * num_states;
        if probs.len() != expected {
            return Err(MfgError::DimensionMismatch {
                what: "transition table",
                expected,
                found: probs.len(),
            });
        }
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            probs,
        })
    }

    /// Builds the kernel from a function returning P_h(·|s, a).
    pub fn from_fn<F>(horizon: usize, num_states: usize, num_actions: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> Vec<f64>,
    {
        let mut probs = Vec::with_capacity(horizon * num_states * num_actions * num_states);
        for h in 0..horizon {
            for s in 0..num_states {
                for a in 0..num_actions {
                    let row = f(h, s, a);
                    if row.len() != num_states {
                        return Err(MfgError::DimensionMismatch {
                            what: "transition row",
                            expected: num_states,
                            found: row.len(),
                        });
                    }
                    probs.extend(row);
                }
            }
        }
        Self::from_flat(horizon, num_states, num_actions, probs)
    }

    /// The kernel that keeps every agent in place.
    pub fn identity(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self::from_fn(horizon, num_states, num_actions, |_, s, _| {
            let mut row = vec![0.0; num_states];
            row[s] = 1.0;
            row
        })
        .expect("identity kernel has consistent shape")
    }

    #[inline]
    pub fn next(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = ((h * self.num_states + s) * self.num_actions + a) * self.num_states;
        &self.probs[start..start + self.num_states]
    }

    pub(crate) fn next_mut(&mut self, h: usize, s: usize, a: usize) -> &mut [f64] {
        let start = ((h * self.num_states + s) * self.num_actions + a) * self.num_states;
        &mut self.probs[start..start + self.num_states]
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

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

pub type RewardFn = dyn Fn(usize, usize, usize, &[f64]) -> f64 + Send + Sync;

/// How r_h(s, a, μ_h) is computed.
#[derive(Clone)]
pub enum RewardKind {
    /// −|a|/|S| − |s − ⌊|S|/2⌋|/|S| − log max(μ_h(s), floor), with actions {−1, 0, +1}.
    BeachBar,
    /// μ-independent coefficients `[h][s][a]`, optionally minus log max(μ_h(s), floor).
    Table {
        num_states: usize,
        num_actions: usize,
        coefficients: Vec<f64>,
        crowd_penalty: bool,
    },
    /// Arbitrary in-process reward. Not serializable.
    Custom(Arc<RewardFn>),
}

impl fmt::Debug for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardKind::BeachBar => f.write_str("BeachBar"),
            RewardKind::Table {
                num_states,
                num_actions,
                crowd_penalty,
                ..
            } => f
                .debug_struct("Table")
                .field("num_states", num_states)
                .field("num_actions", num_actions)
                .field("crowd_penalty", crowd_penalty)
                .finish_non_exhaustive(),
            RewardKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Reward r_h(s, a, μ_h) together with its declared ℓ₁-Lipschitz constant in μ.
#[derive(Clone, Debug)]
pub struct RewardModel {
    kind: RewardKind,
    lipschitz_hint: f64,
    mu_floor: f64,
}

impl RewardModel {
    /// The crowd term −log max(μ, floor) is 1/floor-Lipschitz on the simplex.
    pub fn beach_bar(mu_floor: f64) -> Result<Self> {
        check_floor(mu_floor)?;
        Ok(Self {
            kind: RewardKind::BeachBar,
            lipschitz_hint: 1.0 / mu_floor,
            mu_floor,
        })
    }

    pub fn table(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        coefficients: Vec<f64>,
        crowd_penalty: bool,
        mu_floor: f64,
    ) -> Result<Self> {
        check_floor(mu_floor)?;
        let expected = horizon * num_states * num_actions;
        if coefficients.len() != expected {
            return Err(MfgError::DimensionMismatch {
                what: "reward table",
                expected,
                found: coefficients.len(),
            });
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(MfgError::InvalidParameter {
                name: "coefficients",
                reason: format!("non-finite coefficient {bad}"),
            });
        }
        Ok(Self {
            kind: RewardKind::Table {
                num_states,
                num_actions,
                coefficients,
                crowd_penalty,
            },
            lipschitz_hint: if crowd_penalty { 1.0 / mu_floor } else { 0.0 },
            mu_floor,
        })
    }

    /// r ≡ value everywhere.
    pub fn constant(horizon: usize, num_states: usize, num_actions: usize, value: f64) -> Self {
        Self::table(
            horizon,
            num_states,
            num_actions,
            vec![value; horizon * num_states * num_actions],
            false,
            DEFAULT_MU_FLOOR,
        )
        .expect("constant reward table has consistent shape")
    }

    pub fn custom<F>(f: F, lipschitz_hint: f64) -> Self
    where
        F: Fn(usize, usize, usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: RewardKind::Custom(Arc::new(f)),
            lipschitz_hint,
            mu_floor: DEFAULT_MU_FLOOR,
        }
    }

    pub fn kind(&self) -> &RewardKind {
        &self.kind
    }

    pub fn lipschitz_hint(&self) -> f64 {
        self.lipschitz_hint
    }

    pub fn mu_floor(&self) -> f64 {
        self.mu_floor
    }

    /// Replaces the clamp used inside the logarithmic crowd term.
    pub fn with_mu_floor(mut self, mu_floor: f64) -> Result<Self> {
        check_floor(mu_floor)?;
        self.mu_floor = mu_floor;
        match self.kind {
            RewardKind::BeachBar => self.lipschitz_hint = 1.0 / mu_floor,
            RewardKind::Table {
                crowd_penalty: true, ..
            } => self.lipschitz_hint = 1.0 / mu_floor,
            _ => {}
        }
        Ok(self)
    }

    #[inline]
    fn crowd(&self, mu_s: f64) -> f64 {
        -mu_s.max(self.mu_floor).ln()
    }

    /// r_h(s, a, μ_h).
    pub fn evaluate(&self, h: usize, s: usize, a: usize, mu_h: &[f64]) -> f64 {
        match &self.kind {
            RewardKind::BeachBar => {
                let n = mu_h.len();
                let step = a as f64 - 1.0;
                let center = (n / 2) as f64;
                -step.abs() / n as f64 - (s as f64 - center).abs() / n as f64 + self.crowd(mu_h[s])
            }
            RewardKind::Table {
                num_states,
                num_actions,
                coefficients,
                crowd_penalty,
            } => {
                let base = coefficients[(h * num_states + s) * num_actions + a];
                if *crowd_penalty {
                    base + self.crowd(mu_h[s])
                } else {
                    base
                }
            }
            RewardKind::Custom(f) => f(h, s, a, mu_h),
        }
    }
}

fn check_floor(mu_floor: f64) -> Result<()> {
    if mu_floor.is_finite() && mu_floor > 0.0 {
        Ok(())
    } else {
        Err(MfgError::InvalidParameter {
            name: "mu_floor",
            reason: format!("must be positive and finite, got {mu_floor}"),
        })
    }
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(MfgError::DimensionMismatch { what, expected, found })
    }
}

/// A finite MFG instance (S, A, H, P, r, μ₁).
#[derive(Clone, Debug)]
pub struct MfgModel {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    transitions: TransitionKernel,
    reward: RewardModel,
    initial_distribution: Vec<f64>,
}

impl MfgModel {
    /// Checks that all tables agree on shape. Stochasticity, reachability and
    /// the horizon bound are diagnosed separately by [`validate_model`].
    pub fn new(transitions: TransitionKernel, reward: RewardModel, initial_distribution: Vec<f64>) -> Result<Self> {
        let (horizon, num_states, num_actions) = (
            transitions.horizon(),
            transitions.num_states(),
            transitions.num_actions(),
        );
        if horizon == 0 || num_states == 0 || num_actions == 0 {
            return Err(MfgError::InvalidParameter {
                name: "dimensions",
                reason: format!("H={horizon}, |S|={num_states}, |A|={num_actions} must all be positive"),
            });
        }
        check_dim("initial distribution", num_states, initial_distribution.len())?;
        if let RewardKind::Table {
            num_states: rs,
            num_actions: ra,
            coefficients,
            ..
        } = reward.kind()
        {
            check_dim("reward states", num_states, *rs)?;
            check_dim("reward actions", num_actions, *ra)?;
            check_dim("reward table", horizon * num_states * num_actions, coefficients.len())?;
        }
        if matches!(reward.kind(), RewardKind::BeachBar) && num_actions != BEACH_BAR_ACTIONS {
            return Err(MfgError::DimensionMismatch {
                what: "beach bar actions",
                expected: BEACH_BAR_ACTIONS,
                found: num_actions,
            });
        }
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            transitions,
            reward,
            initial_distribution,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn transitions(&self) -> &TransitionKernel {
        &self.transitions
    }

    pub fn reward(&self) -> &RewardModel {
        &self.reward
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial_distribution
    }

    /// Same instance with a different reward.
    pub fn with_reward(&self, reward: RewardModel) -> Result<Self> {
        Self::new(self.transitions.clone(), reward, self.initial_distribution.clone())
    }

    pub fn uniform_policy(&self) -> Policy {
        Policy::uniform(self.horizon, self.num_states, self.num_actions)
    }

    /// Tabulates r_h(s, a, μ_h) for every (h, s, a) under the given flow, `[h][s][a]`.
    pub fn reward_table(&self, mu: &MeanFieldFlow) -> Vec<f64> {
        let mut table = Vec::with_capacity(self.horizon * self.num_states * self.num_actions);
        for h in 0..self.horizon {
            let mu_h = mu.step(h);
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    table.push(self.reward.evaluate(h, s, a, mu_h));
                }
            }
        }
        table
    }
}
