use super::{DualArrays, SolverState};
use crate::exec::Executor;
use crate::model::Instance;

/// Multiplier ascent with unit step, from the previous iterate `(x, y)`:
///
/// * `dual_dem ← [dual_dem + (Σ_{r∈P_c} x_r − D_c)]₊`
/// * `dual_cap ← [dual_cap + (Σ_{r∋e} y_er − C_e)]₊`
/// * `dual_con ← dual_con + (x_r − y_er)`
/// * `dual_neg ← [dual_neg − x_r]₊`
///
/// The clamps coincide with adding the residual including the optimal slack
/// of each inequality. The consensus constraint is an equality, so its
/// multiplier is not clamped.
pub fn update_duals(exec: &Executor, instance: &Instance, state: &SolverState, out: &mut DualArrays) {
    let x = &state.x;
    let y = &state.y;
    let prev = &state.duals;
    let demands = instance.demands();
    let caps = instance.capacities();

    exec.fill(&mut out.dem, |c| {
        (prev.dem[c] + (instance.commodity_sum(x, c) - demands[c])).max(0.0)
    });
    exec.fill(&mut out.cap, |e| {
        (prev.cap[e] + (instance.edge_pair_sum(y, e) - caps[e])).max(0.0)
    });
    exec.fill(&mut out.con, |p| prev.con[p] + (x[instance.pair_path(p)] - y[p]));
    exec.fill(&mut out.neg, |r| (prev.neg[r] - x[r]).max(0.0));
}
