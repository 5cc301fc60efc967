use super::DualArrays;
use crate::exec::Executor;
use crate::model::Instance;
use crate::reduce::pairwise_sum_by;

/// Per-edge subproblem: choose suggestions `y_e· ≥ 0` closest to the targets
/// `v_er = x_r + dual_con_er` subject to the hinge penalty on
/// `dual_cap_e + Σ y_e· − C_e`.
///
/// The minimiser is `y_er = [v_er − T_e]₊` with a common back-off level
/// `T_e ≥ 0`: zero when the clamped targets fit in `C_e − dual_cap_e`,
/// otherwise the unique root of `T = Σ [v_er − T]₊ − (C_e − dual_cap_e)`.
/// Returns that level.
pub fn edge_level(instance: &Instance, x: &[f64], duals: &DualArrays, e: usize) -> f64 {
    let pairs = instance.edge_pairs(e);
    let target = |i: usize| {
        let p = pairs[i];
        x[instance.pair_path(p)] + duals.con[p]
    };
    let budget = instance.capacities()[e] - duals.cap[e];
    let positive = pairwise_sum_by(pairs.len(), |i| target(i).max(0.0));
    if positive <= budget {
        return 0.0;
    }
    // The level rises monotonically towards the root while the active set
    // {v > T} only shrinks, so this terminates in at most |pairs| + 1 rounds.
    let mut level = 0.0;
    for _ in 0..=pairs.len() {
        let mut active = 0usize;
        for i in 0..pairs.len() {
            if target(i) > level {
                active += 1;
            }
        }
        let active_sum = pairwise_sum_by(pairs.len(), |i| {
            let v = target(i);
            if v > level {
                v
            } else {
                0.0
            }
        });
        let next = (active_sum - budget) / (active as f64 + 1.0);
        if next <= level {
            break;
        }
        level = next;
    }
    level
}

/// Recomputes every `y_er` from the previous rates and the current duals.
/// `levels` receives `T_e` per edge.
pub fn update_rate_suggestions(
    exec: &Executor,
    instance: &Instance,
    x: &[f64],
    duals: &DualArrays,
    levels: &mut [f64],
    y: &mut [f64],
) {
    exec.fill(levels, |e| edge_level(instance, x, duals, e));
    let levels = &*levels;
    exec.fill(y, |p| {
        let e = instance.pair_edge(p);
        (x[instance.pair_path(p)] + duals.con[p] - levels[e]).max(0.0)
    });
}

/// The mean-cost suggestion rule: `cost_er = β(−C_e − x_r) − dual_cap_e −
/// dual_con_er` and `y_er = [(mean_e cost − cost_er)/β]₊`.
///
/// Kept for comparison only. `C_e` and `dual_cap_e` are common to every
/// pair on an edge and cancel in the difference, so this rule never sees
/// capacity; the solver uses [`update_rate_suggestions`].
pub fn mean_cost_suggestions(
    exec: &Executor,
    instance: &Instance,
    x: &[f64],
    duals: &DualArrays,
    beta: f64,
    y: &mut [f64],
) {
    let caps = instance.capacities();
    let cost = |p: usize| {
        let e = instance.pair_edge(p);
        beta * (-caps[e] - x[instance.pair_path(p)]) - duals.cap[e] - duals.con[p]
    };
    let mut mean = vec![0.0; instance.num_edges()];
    exec.fill(&mut mean, |e| {
        let pairs = instance.edge_pairs(e);
        if pairs.is_empty() {
            return 0.0;
        }
        pairwise_sum_by(pairs.len(), |i| cost(pairs[i])) / pairs.len() as f64
    });
    exec.fill(y, |p| ((mean[instance.pair_edge(p)] - cost(p)) / beta).max(0.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    fn mean_cost(instance: &Instance, x: &[f64], beta: f64) -> Vec<f64> {
        let mut y = vec![0.0; instance.num_pairs()];
        let duals = DualArrays::zeros(instance);
        mean_cost_suggestions(&Executor::sequential(), instance, x, &duals, beta, &mut y);
        y
    }

    #[test]
    fn mean_cost_rule_zero_on_single_path_edge() {
        let inst = single_edge(10.0, 20.0);
        assert_eq!(mean_cost(&inst, &[4.0], 1.0), vec![0.0]);
    }

    #[test]
    fn mean_cost_rule_two_paths() {
        // costs (−14, −12), mean −13.
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        let y = mean_cost(&inst, &[4.0, 2.0], 1.0);
        assert_eq!((y[1], y[3]), (1.0, 0.0));
    }

    #[test]
    fn mean_cost_rule_symmetric_and_blind_to_capacity() {
        let inst = shared_edge(3, 10.0, &[20.0; 3]);
        assert!(mean_cost(&inst, &[3.0; 3], 1.0).iter().all(|&v| v == 0.0));
        let wide = inst.with_values(&[1e6, 1e9, 1e9, 1e9], inst.demands()).unwrap();
        let (a, b) = (mean_cost(&inst, &[5.0, 1.0, 2.0], 1.0), mean_cost(&wide, &[5.0, 1.0, 2.0], 1.0));
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0), "{u} vs {v}");
        }
    }

    fn suggest(instance: &Instance, x: &[f64], duals: &DualArrays) -> (Vec<f64>, Vec<f64>) {
        let mut levels = vec![0.0; instance.num_edges()];
        let mut y = vec![0.0; instance.num_pairs()];
        update_rate_suggestions(&Executor::sequential(), instance, x, duals, &mut levels, &mut y);
        (levels, y)
    }

    /// Direct minimisation of the edge objective by coordinate-free grid
    /// refinement over the level, independent of the active-set loop.
    fn brute_level(targets: &[f64], budget: f64) -> f64 {
        let g = |t: f64| t + budget - targets.iter().map(|v| (v - t).max(0.0)).sum::<f64>();
        if g(0.0) >= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, targets.iter().cloned().fold(0.0, f64::max) + budget.abs() + 1.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn single_path_under_capacity_passes_through() {
        let inst = single_edge(10.0, 20.0);
        let duals = DualArrays::zeros(&inst);
        let (levels, y) = suggest(&inst, &[4.0], &duals);
        assert_eq!(levels, vec![0.0]);
        assert_eq!(y, vec![4.0]);
    }

    #[test]
    fn single_path_over_capacity_splits_the_excess() {
        // min (y - 10)² + (y - 12)² → y = 11.
        let inst = single_edge(10.0, 20.0);
        let duals = DualArrays::zeros(&inst);
        let (levels, y) = suggest(&inst, &[12.0], &duals);
        assert_eq!(levels, vec![1.0]);
        assert_eq!(y, vec![11.0]);
    }

    #[test]
    fn two_paths_share_the_back_off() {
        // Targets (8, 6) on cap 10: T = (14 - 10) / 3.
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        let duals = DualArrays::zeros(&inst);
        let (levels, y) = suggest(&inst, &[8.0, 6.0], &duals);
        assert!((levels[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((y[1] - (8.0 - 4.0 / 3.0)).abs() < 1e-14);
        assert!((y[3] - (6.0 - 4.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn small_targets_drop_out_of_the_active_set() {
        // Targets (10, 0.5) on cap 4: with both active T = 6.5/3 > 0.5, so
        // the second leaves and T = (10 - 4) / 2 = 3.
        let inst = shared_edge(2, 4.0, &[20.0, 20.0]);
        let duals = DualArrays::zeros(&inst);
        let (levels, y) = suggest(&inst, &[10.0, 0.5], &duals);
        assert_eq!(levels[0], 3.0);
        assert_eq!(y[1], 7.0);
        assert_eq!(y[3], 0.0);
    }

    #[test]
    fn symmetric_targets_get_equal_suggestions() {
        let inst = shared_edge(3, 6.0, &[9.0; 3]);
        let duals = DualArrays::zeros(&inst);
        let (_, y) = suggest(&inst, &[5.0, 5.0, 5.0], &duals);
        let shared: Vec<f64> = inst.edge_pairs(0).iter().map(|&p| y[p]).collect();
        assert!(shared.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn level_matches_bisection_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let inst = shared_edge(5, 1.0, &[1.0; 5]);
        for _ in 0..500 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..6.0)).collect();
            let mut duals = DualArrays::zeros(&inst);
            for v in duals.con.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            duals.cap[0] = rng.gen_range(0.0..3.0);
            let cap = rng.gen_range(0.0..10.0);
            let caps: Vec<f64> = inst.capacities().iter().enumerate().map(|(e, &c)| if e == 0 { cap } else { c }).collect();
            let inst = inst.with_values(&caps, inst.demands()).unwrap();
            let targets: Vec<f64> = inst
                .edge_pairs(0)
                .iter()
                .map(|&p| x[inst.pair_path(p)] + duals.con[p])
                .collect();
            let level = edge_level(&inst, &x, &duals, 0);
            let expect = brute_level(&targets, cap - duals.cap[0]);
            assert!((level - expect).abs() < 1e-9, "{level} vs {expect}");
            assert!(level >= 0.0);
        }
    }
}
