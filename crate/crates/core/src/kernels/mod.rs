//! Closed-form block updates of one decomposition iteration.
//!
//! The iteration is a two-block alternating scheme over the scaled augmented
//! Lagrangian
//!
//! ```text
//! L = -Σ_c U_α(S_c)
//!     + β/2 Σ_c [dual_dem_c + S_c - D_c]₊²
//!     + β/2 Σ_e [dual_cap_e + Σ_{r∋e} y_er - C_e]₊²
//!     + β/2 Σ_(e,r) (dual_con_er + x_r - y_er)²
//!     + β/2 Σ_r [dual_neg_r - x_r]₊²            with y ≥ 0
//! ```
//!
//! where each hinge is what remains of a squared equality residual after its
//! non-negative slack has been minimised out. One iteration runs, separated
//! by barriers:
//!
//! 1. [`update_duals`]: multiplier ascent from the previous iterate;
//! 2. [`update_rate_suggestions`]: every edge picks its `y_e·` (block one);
//! 3. [`solve_commodity_sums`]: the scalar stationarity root per commodity;
//! 4. [`update_rates`]: closed-form path rates from those sums (block two);
//! 5. [`update_slacks`]: the slack values both blocks implicitly chose.
//!
//! Every step is an elementwise map over one index space with per-edge or
//! per-commodity reductions in fixed order.

mod duals;
mod lagrangian;
mod rates;
mod slacks;
mod suggestions;
mod sums;
mod utility;

pub use duals::update_duals;
pub use lagrangian::{rate_block_value, suggestion_block_value};
pub use rates::{path_rate, update_rates};
pub use slacks::update_slacks;
pub use suggestions::{edge_level, mean_cost_suggestions, update_rate_suggestions};
pub use sums::{
    commodity_sum_root, consensus_terms, solve_commodity_sums, solve_sum_equation, CommodityBlock, SumEquation,
    SUM_LOWER_BOUND, SUM_MAX_ITERATIONS, SUM_TOLERANCE,
};
pub use utility::{objective, utility, AlphaUtilityParams};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeError};
use crate::model::Instance;

/// The four multiplier families, each in scaled form (multiplier / β).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualArrays {
    /// Per commodity.
    pub dem: Vec<f64>,
    /// Per edge.
    pub cap: Vec<f64>,
    /// Per `(edge, path)` pair.
    pub con: Vec<f64>,
    /// Per path.
    pub neg: Vec<f64>,
}

impl DualArrays {
    pub fn zeros(instance: &Instance) -> Self {
        DualArrays {
            dem: vec![0.0; instance.num_commodities()],
            cap: vec![0.0; instance.num_edges()],
            con: vec![0.0; instance.num_pairs()],
            neg: vec![0.0; instance.num_paths()],
        }
    }

    pub fn families(&self) -> [&[f64]; 4] {
        [&self.dem, &self.cap, &self.con, &self.neg]
    }

    /// Multiplies every entry by `factor`; used to keep the unscaled
    /// multipliers fixed when β changes.
    pub fn rescale(&mut self, factor: f64) {
        for v in [&mut self.dem, &mut self.cap, &mut self.con, &mut self.neg] {
            for d in v.iter_mut() {
                *d *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlackArrays {
    /// Per commodity: unused demand headroom.
    pub dem: Vec<f64>,
    /// Per edge: unused capacity headroom.
    pub cap: Vec<f64>,
}

impl SlackArrays {
    pub fn zeros(instance: &Instance) -> Self {
        SlackArrays {
            dem: vec![0.0; instance.num_commodities()],
            cap: vec![0.0; instance.num_edges()],
        }
    }
}

/// All iterate arrays of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    /// Path rates.
    pub x: Vec<f64>,
    /// Rate suggestion of edge `e` for path `r`, indexed by pair.
    pub y: Vec<f64>,
    pub duals: DualArrays,
    pub slacks: SlackArrays,
    pub beta: f64,
    pub alpha: u32,
    pub k: usize,
}

impl SolverState {
    /// Zero state shaped for `instance` with `y` mirroring `x`.
    pub fn from_rates(instance: &Instance, x: Vec<f64>, beta: f64) -> Result<Self> {
        if x.len() != instance.num_paths() {
            return Err(TeError::LengthMismatch {
                what: "rates",
                expected: instance.num_paths(),
                got: x.len(),
            });
        }
        let y = (0..instance.num_pairs())
            .map(|p| x[instance.pair_path(p)])
            .collect();
        Ok(SolverState {
            x,
            y,
            duals: DualArrays::zeros(instance),
            slacks: SlackArrays::zeros(instance),
            beta,
            alpha: 0,
            k: 0,
        })
    }

    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        let checks: [(&'static str, usize, usize); 8] = [
            ("x", instance.num_paths(), self.x.len()),
            ("y", instance.num_pairs(), self.y.len()),
            ("dual_dem", instance.num_commodities(), self.duals.dem.len()),
            ("dual_cap", instance.num_edges(), self.duals.cap.len()),
            ("dual_con", instance.num_pairs(), self.duals.con.len()),
            ("dual_neg", instance.num_paths(), self.duals.neg.len()),
            ("slack_dem", instance.num_commodities(), self.slacks.dem.len()),
            ("slack_cap", instance.num_edges(), self.slacks.cap.len()),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(TeError::LengthMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }
}
