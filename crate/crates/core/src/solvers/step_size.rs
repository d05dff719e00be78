//! Theoretical learning-rate bound for geometric RMD contraction.
//!
//! With E = H(1 − λ log σ_min)/λ:
//!
//! ```text
//! C_A = 2λ|A| e^E + 2(1+H) − λ(1+2H) log σ_min + 2λ log|A|
//! C   = 4H² (L²H² + C_A² / (|A| e^E))
//! η*  = min{ 1 / (2H(L + C_A)), λ / (2C) }
//! ```
//!
//! E is of order H/λ, so e^E overflows f64 for modest λ. Everything is
//! carried as logarithms and exponentiated only at the end; the plain values
//! may saturate to 0 or ∞ while the logs stay exact.

use crate::error::{MfgError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaStar {
    pub eta_star: f64,
    pub big_c: f64,
    /// C_A, the action-dependent constant inside both bounds.
    pub c_lambda: f64,
    pub log_eta_star: f64,
    pub log_big_c: f64,
    pub log_c_lambda: f64,
}

fn log_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// η* and C for the given regularization, anchor floor σ_min, horizon,
/// action count and reward Lipschitz constant L.
pub fn eta_star(lambda: f64, sigma_min: f64, horizon: usize, num_actions: usize, lipschitz: f64) -> Result<EtaStar> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(MfgError::InvalidParameter {
            name: "lambda",
            reason: format!("must be positive, got {lambda}"),
        });
    }
    if !(sigma_min > 0.0 && sigma_min <= 1.0) {
        return Err(MfgError::InvalidParameter {
            name: "sigma_min",
            reason: format!("must lie in (0, 1], got {sigma_min}"),
        });
    }
    if horizon == 0 || num_actions == 0 {
        return Err(MfgError::InvalidParameter {
            name: "dimensions",
            reason: "horizon and num_actions must be positive".into(),
        });
    }
    if !(lipschitz.is_finite() && lipschitz >= 0.0) {
        return Err(MfgError::InvalidParameter {
            name: "lipschitz",
            reason: format!("must be finite and non-negative, got {lipschitz}"),
        });
    }

    let h = horizon as f64;
    let na = num_actions as f64;
    let log_sigma = sigma_min.ln();
    let exponent = h * (1.0 - lambda * log_sigma) / lambda;

    // Every term of the polynomial part is non-negative since log σ_min ≤ 0.
    let poly = 2.0 * (1.0 + h) - lambda * (1.0 + 2.0 * h) * log_sigma + 2.0 * lambda * na.ln();
    let log_c_lambda = log_add_exp((2.0 * lambda * na).ln() + exponent, poly.ln());

    let log_l = lipschitz.ln();
    let log_big_c = (4.0 * h * h).ln() + log_add_exp(2.0 * (log_l + h.ln()), 2.0 * log_c_lambda - na.ln() - exponent);

    let log_first = -(2.0 * h).ln() - log_add_exp(log_l, log_c_lambda);
    let log_second = lambda.ln() - 2f64.ln() - log_big_c;
    let log_eta_star = log_first.min(log_second);

    Ok(EtaStar {
        eta_star: log_eta_star.exp(),
        big_c: log_big_c.exp(),
        c_lambda: log_c_lambda.exp(),
        log_eta_star,
        log_big_c,
        log_c_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_structure() {
        for (lambda, sigma, h, a, l) in [(0.5, 0.5, 2, 2, 0.0), (1.0, 0.2, 3, 3, 2.0), (2.0, 1.0, 4, 1, 1.0)] {
            let e = eta_star(lambda, sigma, h, a, l).unwrap();
            assert!(e.log_big_c + e.log_eta_star <= (lambda / 2.0).ln() + 1e-12);
            assert!(e.eta_star <= 1.0 / (2.0 * h as f64 * (l + e.c_lambda)) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn survives_huge_exponent() {
        let e = eta_star(0.01, 1.0 / 3.0, 10, 3, 1.0).unwrap();
        assert!(e.log_big_c.is_finite() && e.log_eta_star.is_finite());
        assert!(e.log_eta_star < -700.0);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(eta_star(0.1, 0.0, 2, 3, 1.0).is_err());
        assert!(eta_star(0.1, -0.5, 2, 3, 1.0).is_err());
        assert!(eta_star(0.0, 0.5, 2, 3, 1.0).is_err());
        assert!(eta_star(0.1, 0.5, 2, 3, -1.0).is_err());
    }
}
