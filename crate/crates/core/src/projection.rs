//! Trimming of a near-feasible iterate into an exactly feasible allocation.

use crate::model::Instance;

/// `score_r = S_c(r)^α × C_r`, where `C_r` counts the edges on `r` whose
/// load exceeds capacity. Indexed by path; ties are broken by path index.
pub fn score_paths(instance: &Instance, rates: &[f64], alpha: f64) -> Vec<f64> {
    let sums = instance.commodity_sums(rates);
    let overloaded: Vec<bool> = (0..instance.num_edges())
        .map(|e| instance.edge_load(rates, e) > instance.capacities()[e])
        .collect();
    (0..instance.num_paths())
        .map(|r| {
            let violated = instance.path_edges(r).iter().filter(|&&e| overloaded[e]).count();
            if violated == 0 {
                return 0.0;
            }
            let weight = if alpha == 0.0 { 1.0 } else { sums[instance.path_commodity(r)].powf(alpha) };
            weight * violated as f64
        })
        .collect()
}

/// Paths in descending score order, ascending index among equals.
fn by_score(scores: &[f64], paths: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut order: Vec<usize> = paths.collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Removes up to `amount` from `x`, returning what was actually removed.
/// Always moves `x` when `amount > 0` so that repeated trims terminate
/// even when `amount` is below the resolution of `x`.
fn trim(x: &mut f64, amount: f64) -> f64 {
    let before = *x;
    let delta = amount.min(before);
    let mut after = before - delta;
    if delta > 0.0 && after == before {
        after = before.next_down().max(0.0);
    }
    *x = after;
    before - after
}

/// Clamps negatives, trims commodity excess, then trims edge overload, each
/// time taking from the highest-scoring paths first. The result satisfies
/// every capacity and demand constraint exactly (no tolerance) and is a
/// fixed point of this function.
///
/// Overloaded edges are handled one at a time in descending overload,
/// recomputing loads after each, and the sweep repeats until no edge is
/// overloaded.
pub fn project(instance: &Instance, rates: &[f64], alpha: f64) -> Vec<f64> {
    assert_eq!(rates.len(), instance.num_paths(), "rates length");
    // Also maps NaN and -0.0 to +0.0.
    let mut x: Vec<f64> = rates.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();

    let scores = score_paths(instance, &x, alpha);
    for c in 0..instance.num_commodities() {
        let demand = instance.demands()[c];
        let order = by_score(&scores, instance.commodity_paths(c));
        loop {
            let mut excess = instance.commodity_sum(&x, c) - demand;
            if excess <= 0.0 {
                break;
            }
            for &r in &order {
                if excess <= 0.0 {
                    break;
                }
                excess -= trim(&mut x[r], excess);
            }
        }
    }

    let caps = instance.capacities();
    loop {
        let overload: Vec<f64> = (0..instance.num_edges())
            .map(|e| instance.edge_load(&x, e) - caps[e])
            .collect();
        let mut edges: Vec<usize> = (0..instance.num_edges()).filter(|&e| overload[e] > 0.0).collect();
        if edges.is_empty() {
            return x;
        }
        edges.sort_by(|&a, &b| overload[b].total_cmp(&overload[a]).then(a.cmp(&b)));
        let scores = score_paths(instance, &x, alpha);
        for e in edges {
            let order = by_score(&scores, instance.edge_paths(e));
            loop {
                let mut excess = instance.edge_load(&x, e) - caps[e];
                if excess <= 0.0 {
                    break;
                }
                for &r in &order {
                    if excess <= 0.0 {
                        break;
                    }
                    excess -= trim(&mut x[r], excess);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{build_instance, validate_allocation, Commodity, PathSet, Topology};

    #[test]
    fn no_violations_scores_zero() {
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        assert_eq!(score_paths(&inst, &[3.0, 4.0], 2.0), vec![0.0, 0.0]);
    }

    #[test]
    fn alpha_zero_counts_violations() {
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        assert_eq!(score_paths(&inst, &[6.0, 6.0], 0.0), vec![1.0, 1.0]);
    }

    #[test]
    fn score_arithmetic() {
        // One path over three edges, all overloaded, S = 2, α = 2 → 4 × 3.
        let topo = Topology::from_named_edges(&[
            ("A", "B", 1.0, 1.0),
            ("B", "C", 1.0, 1.0),
            ("C", "D", 1.0, 1.0),
        ])
        .unwrap();
        let inst = build_instance(topo, vec![Commodity::new(0, 3, 5.0)], PathSet::new(vec![vec![vec![0, 1, 2]]])).unwrap();
        assert_eq!(score_paths(&inst, &[2.0], 2.0), vec![12.0]);
    }

    #[test]
    fn feasible_input_unchanged() {
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        assert_eq!(project(&inst, &[4.0, 6.0], 1.0), vec![4.0, 6.0]);
    }

    #[test]
    fn equal_scores_trim_lower_index() {
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        assert_eq!(project(&inst, &[6.0, 6.0], 0.0), vec![4.0, 6.0]);
    }

    #[test]
    fn demand_then_capacity_phase() {
        // One commodity D = 5 on paths (4, 3) that share a C = 5 edge.
        let topo = Topology::from_named_edges(&[
            ("A", "M", 100.0, 1.0),
            ("A", "N", 100.0, 1.0),
            ("M", "B", 100.0, 1.0),
            ("N", "B", 100.0, 1.0),
            ("B", "Z", 5.0, 1.0),
        ])
        .unwrap();
        let a = topo.node_id("A").unwrap();
        let z = topo.node_id("Z").unwrap();
        let inst = build_instance(
            topo,
            vec![Commodity::new(a, z, 5.0)],
            PathSet::new(vec![vec![vec![0, 2, 4], vec![1, 3, 4]]]),
        )
        .unwrap();
        let out = project(&inst, &[4.0, 3.0], 1.0);
        // Both paths score 7 × 1; the lower index gives up the 2 of excess.
        assert_eq!(out, vec![2.0, 3.0]);
        assert!(validate_allocation(&inst, &out).unwrap().is_feasible());
        assert_eq!(project(&inst, &out, 1.0), out);
    }

    #[test]
    fn negative_rates_clamped() {
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        let out = project(&inst, &[-3.0, -0.0], 1.0);
        assert_eq!(out, vec![0.0, 0.0]);
        assert!(out.iter().all(|v| v.is_sign_positive()));
    }

    #[test]
    fn sub_ulp_overload_still_resolved() {
        let inst = single_edge(0.1 + 0.2, 1.0);
        let out = project(&inst, &[0.30000000000000004 + 1e-17], 0.0);
        assert!(out[0] <= inst.capacities()[0]);
    }
}
