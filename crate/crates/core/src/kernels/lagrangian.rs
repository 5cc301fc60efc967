//! The two block objectives of the augmented Lagrangian, evaluated
//! directly. The solver never calls these; they exist so the closed-form
//! updates can be checked against the function they minimise.

use super::utility::utility;
use super::DualArrays;
use crate::model::Instance;
use crate::reduce::pairwise_sum_by;

/// Terms of `L` that depend on the rates `x`, holding `y` and the duals
/// fixed: `-Σ U_α(S) + β/2 Σ[dem + S - D]₊² + β/2 Σ(con + x - y)²
/// + β/2 Σ[neg - x]₊²`.
pub fn rate_block_value(instance: &Instance, duals: &DualArrays, beta: f64, alpha: f64, y: &[f64], x: &[f64]) -> f64 {
    let sums = instance.commodity_sums(x);
    let demands = instance.demands();
    let utility_part = pairwise_sum_by(sums.len(), |c| -utility(sums[c], alpha));
    let dem = pairwise_sum_by(sums.len(), |c| (duals.dem[c] + sums[c] - demands[c]).max(0.0).powi(2));
    let con = pairwise_sum_by(instance.num_pairs(), |p| {
        (duals.con[p] + x[instance.pair_path(p)] - y[p]).powi(2)
    });
    let neg = pairwise_sum_by(x.len(), |r| (duals.neg[r] - x[r]).max(0.0).powi(2));
    utility_part + 0.5 * beta * (dem + con + neg)
}

/// Terms of `L` that depend on the suggestions `y ≥ 0`, holding `x` and
/// the duals fixed: `β/2 Σ_e[cap + Σ y - C]₊² + β/2 Σ(con + x - y)²`.
pub fn suggestion_block_value(instance: &Instance, duals: &DualArrays, beta: f64, x: &[f64], y: &[f64]) -> f64 {
    let caps = instance.capacities();
    let cap = pairwise_sum_by(instance.num_edges(), |e| {
        (duals.cap[e] + instance.edge_pair_sum(y, e) - caps[e]).max(0.0).powi(2)
    });
    let con = pairwise_sum_by(instance.num_pairs(), |p| {
        (duals.con[p] + x[instance.pair_path(p)] - y[p]).powi(2)
    });
    0.5 * beta * (cap + con)
}
