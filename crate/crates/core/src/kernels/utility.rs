use serde::{Deserialize, Serialize};

use crate::reduce::pairwise_sum_by;

/// Fairness exponent of the α-fair family. `α = 0` is throughput, `α = 1`
/// proportional fairness (log), large `α` approaches max-min.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaUtilityParams {
    pub alpha: f64,
}

impl AlphaUtilityParams {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha >= 0.0, "alpha must be non-negative");
        AlphaUtilityParams { alpha }
    }

    pub fn eval(&self, s: f64) -> f64 {
        utility(s, self.alpha)
    }
}

/// α-fair utility `(S^(1-α) - 1) / (1 - α)`, `ln S` at `α = 1`.
///
/// For `α ≥ 1` the value at `S ≤ 0` is `-∞`.
pub fn utility(s: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return s - 1.0;
    }
    if alpha >= 1.0 && s <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if alpha == 1.0 {
        s.ln()
    } else {
        (s.powf(1.0 - alpha) - 1.0) / (1.0 - alpha)
    }
}

/// Aggregate utility `Σ_c U_α(max(S_c, floor))`.
pub fn objective(sums: &[f64], alpha: f64, floor: f64) -> f64 {
    pairwise_sum_by(sums.len(), |c| utility(sums[c].max(floor), alpha))
}
