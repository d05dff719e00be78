//! Tabular mean-field game equilibrium solver.
//!
//! The solver approximates a proximal point iteration on the policy: each
//! outer step finds the KL-regularized equilibrium anchored at the previous
//! iterate, using regularized mirror descent ([`solvers::rmd_solve`]) as the
//! inner method. Progress is measured by exploitability
//! ([`evaluation::exploitability`]).
//!
//! ```
//! use mfg_prox::{beach_bar_model, exploitability, pp_solve, SolverConfig};
//!
//! let model = beach_bar_model(10, 10, 0.1, 1e-9).unwrap();
//! let config = SolverConfig { inner_iters: 20, outer_iters: 3, ..SolverConfig::default() };
//! let (policy, trace) = pp_solve(&model, &model.uniform_policy(), &config).unwrap();
//! assert_eq!(trace.exploitability_series().len(), 3);
//! assert!(exploitability(&model, &policy).unwrap() < exploitability(&model, &model.uniform_policy()).unwrap());
//! ```

pub mod dynamics;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod par;
pub mod solvers;
pub mod values;

pub use dynamics::{cumulative_reward, forward_flow, regularized_reward, tv_distance, weighted_kl, DivergenceWeights};
pub use error::{MfgError, Result};
pub use evaluation::{
    best_response, brute_force_equilibrium_check, distance_to_policy_set, exploitability, exploitability_many,
    BestResponseResult,
};
pub use model::{
    beach_bar_model, check_weak_monotonicity, validate_model, MeanFieldFlow, MfgModel, Policy, RewardModel,
    TransitionKernel, Violation,
};
pub use par::Execution;
pub use solvers::{
    eta_star, mirror_flow_integrate, pp_solve, rmd_baseline, rmd_first_order_residual, rmd_solve, rmd_step,
    ConvergenceTrace, EtaStar, SolverConfig, TraceRecord,
};
pub use values::{advantage_quantity, backward_values, consistency_check_j_equals_v, QTable};
