use super::{SlackArrays, SolverState};
use crate::exec::Executor;
use crate::model::Instance;

/// Slack values that absorb the current inequality gaps:
///
/// * `slack_dem ← [dual_dem/β + (D_c − Σ_{r∈P_c} x_r)]₊`
/// * `slack_cap ← [dual_cap/β + (C_e − Σ_{r∋e} y_er)]₊`
///
/// The iterate updates minimise the slacks out analytically (they are the
/// hinges in the penalty), so these arrays are diagnostic and never feed
/// back into `x` or `y`.
pub fn update_slacks(exec: &Executor, instance: &Instance, state: &SolverState, out: &mut SlackArrays) {
    let beta = state.beta;
    let demands = instance.demands();
    let caps = instance.capacities();
    exec.fill(&mut out.dem, |c| {
        (state.duals.dem[c] / beta + (demands[c] - instance.commodity_sum(&state.x, c))).max(0.0)
    });
    exec.fill(&mut out.cap, |e| {
        (state.duals.cap[e] / beta + (caps[e] - instance.edge_pair_sum(&state.y, e))).max(0.0)
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    fn run(instance: &Instance, state: &SolverState) -> SlackArrays {
        let mut out = SlackArrays::zeros(instance);
        update_slacks(&Executor::sequential(), instance, state, &mut out);
        out
    }

    #[test]
    fn demand_slack_absorbs_the_gap() {
        let inst = single_edge(100.0, 3.0);
        let state = SolverState::from_rates(&inst, vec![2.0], 1.0).unwrap();
        assert_eq!(run(&inst, &state).dem, vec![1.0]);
    }

    #[test]
    fn demand_slack_clamps() {
        let inst = single_edge(100.0, 3.0);
        let state = SolverState::from_rates(&inst, vec![5.0], 1.0).unwrap();
        assert_eq!(run(&inst, &state).dem, vec![0.0]);
    }

    #[test]
    fn capacity_slack_includes_dual_over_beta() {
        let inst = single_edge(10.0, 30.0);
        let mut state = SolverState::from_rates(&inst, vec![10.0], 2.0).unwrap();
        state.duals.cap = vec![2.0];
        assert_eq!(run(&inst, &state).cap, vec![1.0]);
    }
}
