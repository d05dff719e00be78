use super::{MfgModel, RewardModel, TransitionKernel};
use crate::error::{MfgError, Result};

/// Actions are indexed 0, 1, 2 and move the agent by −1, 0, +1.
pub const BEACH_BAR_ACTIONS: usize = 3;

/// The Beach Bar Process: a noisy random walk on the discrete torus
/// {0, …, |S|−1} with a bar at ⌊|S|/2⌋ and a logarithmic crowd penalty.
///
/// The agent lands on its intended cell (s + a) mod |S| with probability
/// 1 − ε and slips to either neighbour of it with probability ε/2 each. The
/// initial distribution is uniform.
pub fn beach_bar_model(num_states: usize, horizon: usize, epsilon: f64, mu_floor: f64) -> Result<MfgModel> {
    if num_states < 2 {
        return Err(MfgError::InvalidParameter {
            name: "num_states",
            reason: format!("need at least 2 states, got {num_states}"),
        });
    }
    if horizon < 2 {
        return Err(MfgError::InvalidParameter {
            name: "horizon",
            reason: format!("need at least 2 steps, got {horizon}"),
        });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(MfgError::InvalidParameter {
            name: "epsilon",
            reason: format!("must lie in (0, 1), got {epsilon}"),
        });
    }

    let n = num_states as i64;
    let wrap = |x: i64| x.rem_euclid(n) as usize;
    let mut kernel = TransitionKernel::from_flat(
        horizon,
        num_states,
        BEACH_BAR_ACTIONS,
        vec![0.0; horizon * num_states * BEACH_BAR_ACTIONS * num_states],
    )?;
    for h in 0..horizon {
        for s in 0..num_states {
            for a in 0..BEACH_BAR_ACTIONS {
                let target = s as i64 + a as i64 - 1;
                let row = kernel.next_mut(h, s, a);
                // With |S| = 2 both neighbours coincide, hence the accumulation.
                row[wrap(target)] += 1.0 - epsilon;
                row[wrap(target - 1)] += epsilon / 2.0;
                row[wrap(target + 1)] += epsilon / 2.0;
            }
        }
    }

    let reward = RewardModel::beach_bar(mu_floor)?;
    MfgModel::new(kernel, reward, vec![1.0 / num_states as f64; num_states])
}
