//! Reference allocations and evaluation metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeError};
use crate::kernels::utility;
use crate::model::{CommodityKey, Instance};

/// Per-path rates with their commodity sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub rates: Vec<f64>,
    pub sums: Vec<f64>,
    pub keys: Vec<CommodityKey>,
    /// Which solver produced it.
    pub label: String,
}

impl Allocation {
    pub fn new(instance: &Instance, rates: Vec<f64>, label: impl Into<String>) -> Self {
        let sums = instance.commodity_sums(&rates);
        Allocation {
            rates,
            sums,
            keys: instance.commodity_keys(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Optimality floor; `None` means `1e-6 × max demand`.
    pub theta: Option<f64>,
}

impl MetricConfig {
    pub fn theta_for(&self, instance: &Instance) -> f64 {
        self.theta.unwrap_or_else(|| default_theta(instance))
    }
}

pub fn default_theta(instance: &Instance) -> f64 {
    let max = instance.demands().iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        1e-6 * max
    } else {
        1e-6
    }
}

/// k-waterfill with k = 1: every unfrozen commodity grows in lockstep on
/// its first path; a commodity freezes when it meets its demand or one of
/// its edges saturates.
pub fn waterfill_baseline(instance: &Instance) -> Allocation {
    let first: Vec<usize> = (0..instance.num_commodities())
        .map(|c| instance.commodity_paths(c).start)
        .collect();
    let n = instance.num_commodities();
    let caps = instance.capacities();
    let demands = instance.demands();
    let mut rate = vec![0.0; n];
    let mut frozen = vec![false; n];
    let mut residual: Vec<f64> = caps.to_vec();
    let mut users = vec![0usize; instance.num_edges()];
    for c in 0..n {
        if demands[c] <= 0.0 {
            frozen[c] = true;
        }
        for &e in instance.path_edges(first[c]) {
            if !frozen[c] {
                users[e] += 1;
            }
        }
    }
    while frozen.iter().any(|f| !f) {
        // Largest lockstep increment before the next demand or edge event.
        let mut delta = f64::INFINITY;
        for c in (0..n).filter(|&c| !frozen[c]) {
            delta = delta.min(demands[c] - rate[c]);
        }
        for e in 0..instance.num_edges() {
            if users[e] > 0 {
                delta = delta.min(residual[e] / users[e] as f64);
            }
        }
        let delta = delta.max(0.0);
        for c in (0..n).filter(|&c| !frozen[c]) {
            rate[c] += delta;
        }
        for e in 0..instance.num_edges() {
            residual[e] -= delta * users[e] as f64;
        }
        let saturated: Vec<bool> = (0..instance.num_edges())
            .map(|e| users[e] > 0 && residual[e] <= 1e-12 * caps[e].max(1.0))
            .collect();
        for c in 0..n {
            if frozen[c] {
                continue;
            }
            let path = instance.path_edges(first[c]);
            if rate[c] >= demands[c] * (1.0 - 1e-15) || path.iter().any(|&e| saturated[e]) {
                frozen[c] = true;
                for &e in path {
                    users[e] -= 1;
                }
            }
        }
    }
    finish(instance, &first, &rate, "waterfill")
}

/// Rates on the given one-path-per-commodity choice, made exactly feasible
/// against accumulated rounding.
fn finish(instance: &Instance, chosen: &[usize], per_commodity: &[f64], label: &str) -> Allocation {
    let mut rates = vec![0.0; instance.num_paths()];
    for (c, &r) in chosen.iter().enumerate() {
        rates[r] = per_commodity[c].clamp(0.0, instance.demands()[c]);
    }
    let rates = crate::projection::project(instance, &rates, 0.0);
    Allocation::new(instance, rates, label)
}

/// The max-min fair allocation when every commodity has exactly one path,
/// by bottleneck levels: all unfrozen commodities share a level; each
/// round computes every edge's fair share of its residual capacity, raises
/// the level to the smallest share or unmet demand, and freezes the
/// commodities that bind.
pub fn exact_maxmin_singlepath(instance: &Instance) -> Result<Allocation> {
    for c in 0..instance.num_commodities() {
        if instance.commodity_paths(c).len() != 1 {
            return Err(TeError::OracleDomain(format!(
                "commodity {c} has {} paths; single-path oracle needs exactly one",
                instance.commodity_paths(c).len()
            )));
        }
    }
    let chosen: Vec<usize> = (0..instance.num_commodities())
        .map(|c| instance.commodity_paths(c).start)
        .collect();
    let n = chosen.len();
    let demands = instance.demands();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    while fixed.iter().any(Option::is_none) {
        let open: Vec<usize> = (0..n).filter(|&c| fixed[c].is_none()).collect();
        let mut share = vec![f64::INFINITY; instance.num_edges()];
        for e in 0..instance.num_edges() {
            let mut used = 0.0;
            let mut count = 0usize;
            for r in instance.edge_paths(e) {
                let c = instance.path_commodity(r);
                match fixed[c] {
                    Some(v) => used += v,
                    None => count += 1,
                }
            }
            if count > 0 {
                share[e] = ((instance.capacities()[e] - used) / count as f64).max(0.0);
            }
        }
        let bottleneck = |c: usize| {
            instance
                .path_edges(chosen[c])
                .iter()
                .map(|&e| share[e])
                .fold(f64::INFINITY, f64::min)
        };
        let level = open
            .iter()
            .map(|&c| demands[c].min(bottleneck(c)))
            .fold(f64::INFINITY, f64::min);
        for &c in &open {
            if demands[c] <= level || bottleneck(c) <= level {
                fixed[c] = Some(level.min(demands[c]));
            }
        }
    }
    let values: Vec<f64> = fixed.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    Ok(finish(instance, &chosen, &values, "maxmin-singlepath"))
}

/// Objective of the grid oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridObjective {
    Alpha(f64),
    /// Lexicographic maximum of the ascending-sorted commodity sums.
    MaxMin,
}

pub const GRID_MAX_PATHS: usize = 6;

/// Exhaustive search over rate vectors on multiples of `grid_step`,
/// pruned by an optimistic bound (every commodity independently taking
/// all capacity still free on its remaining paths). Returns the best
/// feasible grid point.
pub fn exact_bruteforce_tiny(instance: &Instance, objective: GridObjective, grid_step: f64) -> Result<Allocation> {
    if instance.num_paths() > GRID_MAX_PATHS {
        return Err(TeError::OracleDomain(format!(
            "{} paths exceed the grid oracle limit of {GRID_MAX_PATHS}",
            instance.num_paths()
        )));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(TeError::OracleDomain("grid_step must be positive".into()));
    }
    let mut search = Grid {
        instance,
        objective,
        step: grid_step,
        steps: vec![0; instance.num_paths()],
        residual_steps: instance
            .capacities()
            .iter()
            .map(|&c| (c / grid_step * (1.0 + 1e-12)).floor() as i64)
            .collect(),
        demand_steps: instance
            .demands()
            .iter()
            .map(|&d| (d / grid_step * (1.0 + 1e-12)).floor() as i64)
            .collect(),
        sums: vec![0; instance.num_commodities()],
        best: None,
        best_steps: vec![0; instance.num_paths()],
    };
    search.dfs(0);
    let rates: Vec<f64> = search.best_steps.iter().map(|&k| k as f64 * grid_step).collect();
    let rates = crate::projection::project(instance, &rates, 0.0);
    Ok(Allocation::new(instance, rates, "grid"))
}

#[derive(Debug, Clone, PartialEq)]
enum Score {
    Value(f64),
    Sorted(Vec<i64>),
}

impl Score {
    fn better_than(&self, other: &Score) -> bool {
        match (self, other) {
            (Score::Value(a), Score::Value(b)) => a > b,
            (Score::Sorted(a), Score::Sorted(b)) => a > b,
            _ => unreachable!("mixed objectives"),
        }
    }
}

struct Grid<'a> {
    instance: &'a Instance,
    objective: GridObjective,
    step: f64,
    steps: Vec<i64>,
    residual_steps: Vec<i64>,
    demand_steps: Vec<i64>,
    sums: Vec<i64>,
    best: Option<Score>,
    best_steps: Vec<i64>,
}

impl Grid<'_> {
    fn score(&self, sums: &[i64]) -> Score {
        match self.objective {
            GridObjective::Alpha(a) => Score::Value(
                sums.iter()
                    .map(|&k| utility(k as f64 * self.step, a))
                    .sum(),
            ),
            GridObjective::MaxMin => {
                let mut v = sums.to_vec();
                v.sort_unstable();
                Score::Sorted(v)
            }
        }
    }

    fn headroom(&self, r: usize) -> i64 {
        let c = self.instance.path_commodity(r);
        let edge = self
            .instance
            .path_edges(r)
            .iter()
            .map(|&e| self.residual_steps[e])
            .min()
            .unwrap_or(0);
        edge.min(self.demand_steps[c] - self.sums[c]).max(0)
    }

    /// Sums reachable if each commodity could use all currently free
    /// capacity on its unassigned paths.
    fn optimistic(&self, depth: usize) -> Vec<i64> {
        let mut sums = self.sums.clone();
        for r in depth..self.instance.num_paths() {
            let c = self.instance.path_commodity(r);
            sums[c] += self.headroom(r);
        }
        for (c, s) in sums.iter_mut().enumerate() {
            *s = (*s).min(self.demand_steps[c]);
        }
        sums
    }

    fn dfs(&mut self, depth: usize) {
        let n = self.instance.num_paths();
        if depth == n {
            let score = self.score(&self.sums);
            if self.best.as_ref().is_none_or(|b| score.better_than(b)) {
                self.best = Some(score);
                self.best_steps.clone_from(&self.steps);
            }
            return;
        }
        if let Some(best) = &self.best {
            if !self.score(&self.optimistic(depth)).better_than(best) {
                return;
            }
        }
        let max = self.headroom(depth);
        // The last path has no later competitor, so only its maximum counts.
        let lowest = if depth + 1 == n { max } else { 0 };
        let c = self.instance.path_commodity(depth);
        for k in (lowest..=max).rev() {
            self.steps[depth] = k;
            self.sums[c] += k;
            for i in self.instance.path_pairs(depth) {
                self.residual_steps[self.instance.pair_edge(i)] -= k;
            }
            self.dfs(depth + 1);
            for i in self.instance.path_pairs(depth) {
                self.residual_steps[self.instance.pair_edge(i)] += k;
            }
            self.sums[c] -= k;
        }
        self.steps[depth] = 0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub passed: bool,
    /// A path of an unsatisfied commodity with no saturated edge.
    pub ascent_path: Option<usize>,
    /// Largest relative violation of price stationarity, after fitting
    /// non-negative edge and demand prices.
    pub stationarity_residual: f64,
    /// Largest relative complementary-slackness violation among the
    /// fitted prices (price on a constraint that is not tight).
    pub complementarity_residual: f64,
}

/// Approximate KKT test for proportional fairness (α = 1).
///
/// First checks that no path of an unsatisfied commodity is free to grow:
/// each must cross an edge within `tol × C_e` of capacity. Then fits
/// prices `λ_e ≥ 0` on tight edges and `μ_c ≥ 0` on met demands so that
/// `1/S_c ≈ μ_c + Σ_{e∈r} λ_e` on used paths (and `≤` on unused ones),
/// reporting the worst relative mismatch. Passes when no ascent path
/// exists and the stationarity residual is at most `tol`.
pub fn kkt_check_proportional(instance: &Instance, allocation: &Allocation, tol: f64) -> KktReport {
    let x = &allocation.rates;
    let sums = instance.commodity_sums(x);
    let caps = instance.capacities();
    let demands = instance.demands();
    let loads = instance.edge_loads(x);
    let tight_edge: Vec<bool> = (0..instance.num_edges())
        .map(|e| caps[e] - loads[e] <= tol * caps[e].max(f64::MIN_POSITIVE))
        .collect();
    let met: Vec<bool> = (0..instance.num_commodities())
        .map(|c| sums[c] >= demands[c] * (1.0 - tol))
        .collect();

    let mut ascent_path = None;
    'outer: for c in 0..instance.num_commodities() {
        if met[c] {
            continue;
        }
        for r in instance.commodity_paths(c) {
            if !instance.path_edges(r).iter().any(|&e| tight_edge[e]) {
                ascent_path = Some(r);
                break 'outer;
            }
        }
    }

    // Price variables: tight edges, then met commodities.
    let edge_var: Vec<Option<usize>> = {
        let mut next = 0;
        tight_edge
            .iter()
            .map(|&t| {
                t.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let n_edge_vars = edge_var.iter().flatten().count();
    let dem_var: Vec<Option<usize>> = {
        let mut next = n_edge_vars;
        met.iter()
            .map(|&m| {
                m.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let n_vars = n_edge_vars + dem_var.iter().flatten().count();
    let used_threshold = |r: usize| x[r] > tol * sums[instance.path_commodity(r)];
    let rows: Vec<(Vec<usize>, f64, bool)> = (0..instance.num_paths())
        .filter(|&r| sums[instance.path_commodity(r)] > 0.0)
        .map(|r| {
            let c = instance.path_commodity(r);
            let mut vars: Vec<usize> = instance.path_edges(r).iter().filter_map(|&e| edge_var[e]).collect();
            if let Some(v) = dem_var[c] {
                vars.push(v);
            }
            (vars, 1.0 / sums[c], used_threshold(r))
        })
        .collect();
    let prices = fit_prices(&rows, n_vars);
    let mut stationarity: f64 = 0.0;
    for (vars, target, used) in &rows {
        let sum: f64 = vars.iter().map(|&v| prices[v]).sum();
        let gap = if *used {
            (sum - target).abs()
        } else {
            (target - sum).max(0.0)
        };
        stationarity = stationarity.max(gap / target);
    }
    if sums.iter().any(|&s| s <= 0.0) {
        stationarity = f64::INFINITY;
    }
    // By construction prices sit only on tight constraints.
    let complementarity_residual = 0.0;
    KktReport {
        passed: ascent_path.is_none() && stationarity <= tol,
        ascent_path,
        stationarity_residual: stationarity,
        complementarity_residual,
    }
}

/// Non-negative least squares by cyclic coordinate descent on
/// `Σ_rows (Σ_{v∈row} p_v − target)²` over used rows, with unused rows
/// only penalised when their price sum falls short of the target.
fn fit_prices(rows: &[(Vec<usize>, f64, bool)], n_vars: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_vars];
    if n_vars == 0 {
        return p;
    }
    let mut var_rows: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
    for (i, (vars, _, _)) in rows.iter().enumerate() {
        for &v in vars {
            var_rows[v].push(i);
        }
    }
    let mut row_sum: Vec<f64> = vec![0.0; rows.len()];
    for _ in 0..20_000 {
        let mut moved = 0.0f64;
        for v in 0..n_vars {
            // Exact minimiser along p_v of the piecewise quadratic, found
            // by treating the active rows at the current point.
            let mut num = 0.0;
            let mut den = 0.0;
            for &i in &var_rows[v] {
                let (_, target, used) = &rows[i];
                let others = row_sum[i] - p[v];
                if *used || others + p[v] < *target {
                    num += target - others;
                    den += 1.0;
                }
            }
            let new = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
            let d = new - p[v];
            if d != 0.0 {
                for &i in &var_rows[v] {
                    row_sum[i] += d;
                }
                p[v] = new;
                moved = moved.max(d.abs());
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    p
}

/// Mean over commodities of `min(S_X / max(S_OPT, θ), 1)`; 1 when empty.
pub fn optimality_of_sums(sums: &[f64], reference: &[f64], theta: f64) -> f64 {
    if sums.is_empty() {
        return 1.0;
    }
    let total: f64 = sums
        .iter()
        .zip(reference)
        .map(|(&s, &o)| (s / o.max(theta)).min(1.0))
        .sum();
    total / sums.len() as f64
}

/// Optimality of `x` against `reference`, matching commodities by key.
pub fn optimality_metric(x: &Allocation, reference: &Allocation, theta: f64) -> Result<f64> {
    let aligned = align(x, reference)?;
    Ok(optimality_of_sums(&aligned, &reference.sums, theta))
}

/// `x`'s sums reordered to `reference`'s commodity order.
fn align(x: &Allocation, reference: &Allocation) -> Result<Vec<f64>> {
    if x.keys.len() != reference.keys.len() {
        return Err(TeError::CommodityMismatch);
    }
    if x.keys == reference.keys {
        return Ok(x.sums.clone());
    }
    let index: HashMap<CommodityKey, usize> = x.keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    reference
        .keys
        .iter()
        .map(|k| index.get(k).map(|&i| x.sums[i]).ok_or(TeError::CommodityMismatch))
        .collect()
}

/// The stale allocation as it would be delivered under `later`'s
/// demands and capacities: commodities above their new demand are scaled
/// down proportionally, then each overloaded edge (largest overload
/// first, repeated until none is left) scales all its paths by
/// `C_e / load_e`. Rates are only touched on strict violations.
pub fn apply_stale(allocation: &Allocation, later: &Instance) -> Result<Vec<f64>> {
    if allocation.rates.len() != later.num_paths() || allocation.keys != later.commodity_keys() {
        return Err(TeError::CommodityMismatch);
    }
    let mut x: Vec<f64> = allocation.rates.iter().map(|&v| v.max(0.0)).collect();
    for c in 0..later.num_commodities() {
        let s = later.commodity_sum(&x, c);
        let d = later.demands()[c];
        if s > d {
            let f = if s > 0.0 { d / s } else { 0.0 };
            for r in later.commodity_paths(c) {
                x[r] *= f;
            }
        }
    }
    let caps = later.capacities();
    for _ in 0..1000 {
        let overload: Vec<f64> = (0..later.num_edges()).map(|e| later.edge_load(&x, e) - caps[e]).collect();
        let mut edges: Vec<usize> = (0..later.num_edges()).filter(|&e| overload[e] > 0.0).collect();
        if edges.is_empty() {
            break;
        }
        edges.sort_by(|&a, &b| overload[b].total_cmp(&overload[a]).then(a.cmp(&b)));
        for e in edges {
            let load = later.edge_load(&x, e);
            if load > caps[e] {
                let f = caps[e] / load;
                let paths: Vec<usize> = later.edge_paths(e).collect();
                for r in paths {
                    x[r] *= f;
                }
            }
        }
    }
    Ok(x)
}

/// Drift-adjusted optimality: [`optimality_metric`] of the stale
/// allocation after [`apply_stale`] against the reference for `later`.
pub fn dao_evaluate(allocation: &Allocation, later: &Instance, reference: &Allocation, theta: f64) -> Result<f64> {
    let delivered = apply_stale(allocation, later)?;
    let delivered = Allocation::new(later, delivered, allocation.label.clone());
    optimality_metric(&delivered, reference, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::validate_allocation;

    #[test]
    fn waterfill_symmetric() {
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        let a = waterfill_baseline(&inst);
        assert_eq!(a.sums, vec![5.0, 5.0]);
    }

    #[test]
    fn waterfill_small_demand_freezes_first() {
        let inst = shared_edge(2, 10.0, &[2.0, 20.0]);
        assert_eq!(waterfill_baseline(&inst).sums, vec![2.0, 8.0]);
    }

    #[test]
    fn waterfill_and_exact_chain() {
        let inst = chain(100.0);
        let w = waterfill_baseline(&inst);
        let o = exact_maxmin_singlepath(&inst).unwrap();
        assert_eq!(o.sums, vec![7.5, 2.5, 2.5]);
        for (a, b) in w.sums.iter().zip(&o.sums) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_single_commodity() {
        let inst = single_edge(10.0, 4.0);
        assert_eq!(exact_maxmin_singlepath(&inst).unwrap().sums, vec![4.0]);
        let inst = single_edge(10.0, 40.0);
        assert_eq!(exact_maxmin_singlepath(&inst).unwrap().sums, vec![10.0]);
    }

    #[test]
    fn exact_refuses_multipath() {
        let inst = diamond([4.0, 4.0, 8.0, 8.0], 20.0);
        assert!(matches!(exact_maxmin_singlepath(&inst), Err(TeError::OracleDomain(_))));
    }

    #[test]
    fn grid_boundary_maximum() {
        let inst = single_edge(10.0, 20.0);
        let a = exact_bruteforce_tiny(&inst, GridObjective::Alpha(0.0), 0.5).unwrap();
        assert_eq!(a.rates, vec![10.0]);
    }

    #[test]
    fn grid_log_depends_on_sum_only() {
        // One commodity, two paths over one shared C = 10 edge.
        let topo = crate::model::Topology::from_named_edges(&[
            ("A", "M", 100.0, 1.0),
            ("A", "N", 100.0, 1.0),
            ("M", "B", 100.0, 1.0),
            ("N", "B", 100.0, 1.0),
            ("B", "Z", 10.0, 1.0),
        ])
        .unwrap();
        let (a, z) = (topo.node_id("A").unwrap(), topo.node_id("Z").unwrap());
        let inst = crate::model::build_instance(
            topo,
            vec![crate::model::Commodity::new(a, z, 20.0)],
            crate::model::PathSet::new(vec![vec![vec![0, 2, 4], vec![1, 3, 4]]]),
        )
        .unwrap();
        let g = exact_bruteforce_tiny(&inst, GridObjective::Alpha(1.0), 0.5).unwrap();
        assert_eq!(g.sums, vec![10.0]);
    }

    #[test]
    fn grid_diamond_throughput() {
        let inst = diamond([4.0, 4.0, 8.0, 8.0], 20.0);
        let g = exact_bruteforce_tiny(&inst, GridObjective::Alpha(0.0), 0.2).unwrap();
        assert_eq!(g.rates, vec![4.0, 8.0]);
        assert_eq!(g.sums, vec![12.0]);
    }

    #[test]
    fn grid_maxmin_matches_exact_on_chain() {
        let inst = chain(100.0);
        let g = exact_bruteforce_tiny(&inst, GridObjective::MaxMin, 0.5).unwrap();
        assert_eq!(g.sums, vec![7.5, 2.5, 2.5]);
    }

    #[test]
    fn grid_too_large() {
        let inst = shared_edge(7, 10.0, &[1.0; 7]);
        assert!(exact_bruteforce_tiny(&inst, GridObjective::MaxMin, 1.0).is_err());
    }

    #[test]
    fn kkt_single_bottleneck_passes() {
        let inst = single_edge(10.0, 20.0);
        let a = Allocation::new(&inst, vec![10.0], "t");
        let rep = kkt_check_proportional(&inst, &a, 1e-6);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn kkt_detects_free_path() {
        let inst = diamond([10.0; 4], 30.0);
        let a = Allocation::new(&inst, vec![10.0, 3.0], "t");
        let rep = kkt_check_proportional(&inst, &a, 1e-6);
        assert!(!rep.passed);
        assert_eq!(rep.ascent_path, Some(1));
    }

    #[test]
    fn kkt_detects_unfair_split() {
        // Feasible and Pareto-efficient, but not proportionally fair.
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        let a = Allocation::new(&inst, vec![8.0, 2.0], "t");
        let rep = kkt_check_proportional(&inst, &a, 1e-2);
        assert!(rep.ascent_path.is_none());
        assert!(!rep.passed);
        let fair = Allocation::new(&inst, vec![5.0, 5.0], "t");
        assert!(kkt_check_proportional(&inst, &fair, 1e-6).passed);
    }

    #[test]
    fn optimality_values() {
        let inst = shared_edge(2, 20.0, &[20.0, 20.0]);
        let opt = Allocation::new(&inst, vec![10.0, 10.0], "opt");
        assert_eq!(optimality_metric(&opt, &opt, 1e-6).unwrap(), 1.0);
        let x = Allocation::new(&inst, vec![5.0, 10.0], "x");
        assert_eq!(optimality_metric(&x, &opt, 1e-6).unwrap(), 0.75);
        let over = Allocation::new(&inst, vec![15.0, 10.0], "x");
        assert_eq!(optimality_metric(&over, &opt, 1e-6).unwrap(), 1.0);
    }

    #[test]
    fn optimality_mismatch() {
        let a = Allocation::new(&shared_edge(2, 1.0, &[1.0, 1.0]), vec![0.0, 0.0], "a");
        let b = Allocation::new(&single_edge(1.0, 1.0), vec![0.0], "b");
        assert_eq!(optimality_metric(&a, &b, 1e-6), Err(TeError::CommodityMismatch));
    }

    #[test]
    fn dao_zero_drift_is_optimality() {
        let inst = chain(100.0);
        let opt = exact_maxmin_singlepath(&inst).unwrap();
        let w = Allocation::new(&inst, vec![5.0, 2.0, 3.0], "w");
        let theta = default_theta(&inst);
        assert_eq!(
            dao_evaluate(&w, &inst, &opt, theta).unwrap(),
            optimality_metric(&w, &opt, theta).unwrap()
        );
    }

    #[test]
    fn dao_halved_link_scales_paths() {
        let inst = shared_edge(2, 10.0, &[20.0, 20.0]);
        let a = Allocation::new(&inst, vec![4.0, 6.0], "a");
        let caps: Vec<f64> = inst.capacities().iter().enumerate().map(|(e, &c)| if e == 0 { 5.0 } else { c }).collect();
        let later = inst.with_values(&caps, inst.demands()).unwrap();
        assert_eq!(apply_stale(&a, &later).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn dao_demand_doubles() {
        let inst = chain(4.0);
        let a = exact_maxmin_singlepath(&inst).unwrap();
        let theta = default_theta(&inst);
        let before = optimality_metric(&a, &a, theta).unwrap();
        let later = inst.with_values(inst.capacities(), &[8.0, 8.0, 8.0]).unwrap();
        let opt_later = exact_maxmin_singlepath(&later).unwrap();
        let dao = dao_evaluate(&a, &later, &opt_later, theta).unwrap();
        assert!(dao <= before);
        assert!(dao < 1.0);
    }

    #[test]
    fn oracle_outputs_feasible() {
        for inst in [chain(100.0), shared_edge(3, 7.0, &[1.0, 5.0, 9.0]), single_edge(3.0, 2.0)] {
            for a in [
                waterfill_baseline(&inst),
                exact_maxmin_singlepath(&inst).unwrap(),
                exact_bruteforce_tiny(&inst, GridObjective::Alpha(1.0), 0.25).unwrap(),
            ] {
                assert!(validate_allocation(&inst, &a.rates).unwrap().is_feasible());
            }
        }
    }
}
