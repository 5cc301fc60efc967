//! Outer loop: initialisation, residuals, learning-rate adaptation,
//! convergence and α-continuation, trace capture, final projection.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, TeError};
use crate::exec::{Executor, Parallelism};
use crate::kernels::{
    objective, solve_commodity_sums, update_duals, update_rate_suggestions, update_rates,
    update_slacks, SolverState,
};
use crate::model::{validate_allocation, Instance};
use crate::projection::project;
use crate::reduce::squared_distance;

/// Where the α-continuation ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaTarget {
    Finite(u32),
    /// Keep incrementing α until an increment changes nothing.
    #[default]
    MaxMin,
}

impl fmt::Display for AlphaTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaTarget::Finite(a) => write!(f, "{a}"),
            AlphaTarget::MaxMin => f.write_str("max-min"),
        }
    }
}

impl FromStr for AlphaTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max-min" | "maxmin" | "inf" | "infinity" => Ok(AlphaTarget::MaxMin),
            other => other
                .parse::<u32>()
                .map(AlphaTarget::Finite)
                .map_err(|_| format!("invalid alpha target {s:?}: expected a non-negative integer or \"max-min\"")),
        }
    }
}

impl Serialize for AlphaTarget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlphaTarget::Finite(a) => s.serialize_u32(*a),
            AlphaTarget::MaxMin => s.serialize_str("max-min"),
        }
    }
}

impl<'de> Deserialize<'de> for AlphaTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(a) => Ok(AlphaTarget::Finite(a)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha_target: AlphaTarget,
    /// Convergence threshold on both residuals.
    pub gamma: f64,
    pub beta0: f64,
    /// Residual-balance ratio `A`.
    pub balance_ratio: f64,
    /// Learning-rate multiplier `C`.
    pub beta_factor: f64,
    pub adaptive_beta: bool,
    /// β is reconsidered every this many iterations.
    pub adapt_interval: usize,
    pub max_iterations: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub trace: bool,
    pub parallelism: Parallelism,
    /// Rates are divided by this before iterating and multiplied back
    /// afterwards; `None` picks the smallest positive commodity sum of the
    /// water-filling baseline, so every served commodity starts near or
    /// above one and `S^-α` stays bounded.
    pub unit: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha_target: AlphaTarget::MaxMin,
            gamma: 1e-3,
            beta0: 1.0,
            balance_ratio: 10.0,
            beta_factor: 2.0,
            adaptive_beta: true,
            adapt_interval: 10,
            max_iterations: 5000,
            beta_min: 1e-6,
            beta_max: 1e6,
            trace: false,
            parallelism: Parallelism::Sequential,
            unit: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(TeError::InvalidConfig(msg.to_string()));
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(self.balance_ratio > 1.0) {
            return bad("balance_ratio must exceed 1");
        }
        if !(self.beta_factor > 1.0) {
            return bad("beta_factor must exceed 1");
        }
        if !(self.beta_min > 0.0 && self.beta_min <= self.beta_max) {
            return bad("beta bounds must satisfy 0 < beta_min <= beta_max");
        }
        if !(self.beta0 >= self.beta_min && self.beta0 <= self.beta_max) {
            return bad("beta0 must lie within the beta bounds");
        }
        if let Some(u) = self.unit {
            if !(u > 0.0 && u.is_finite()) {
                return bad("unit must be positive and finite");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖x^{k+1} − x^k‖₂`.
    pub s: f64,
    /// `‖dual^{k+1} − dual^k‖₂` over all four families.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub k: usize,
    pub alpha: u32,
    /// Learning rate the iteration ran with.
    pub beta: f64,
    pub s: f64,
    pub r: f64,
    pub objective: f64,
    pub pct_constraints_violated: f64,
    pub mean_relative_violation: f64,
    /// Optimality of the projected iterate, when a reference was supplied.
    pub projected_optimality: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    /// The first iteration at a new α was already converged.
    Stagnation,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Projected, feasible rates in input units.
    pub rates: Vec<f64>,
    pub sums: Vec<f64>,
    pub iterations: usize,
    pub alpha: u32,
    pub runtime_s: f64,
    pub converged: bool,
    pub stop: StopReason,
    /// Objective `Σ U_α(S)` of the projected rates at the final α.
    pub objective: f64,
    pub trace: Vec<IterationTrace>,
    /// Final iterate before projection, in solver units.
    pub state: SolverState,
    /// Solver unit: input rates = solver rates × unit.
    pub unit: f64,
}

/// Decision of the continuation logic after an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaStep {
    Continue,
    Increment,
    Stop(StopReason),
}

/// Cold start spreads each demand uniformly over its paths; a warm start
/// takes `warm` verbatim. `y` mirrors `x`, duals and slacks are zero.
pub fn initialize_state(instance: &Instance, config: &SolverConfig, warm: Option<&[f64]>) -> Result<SolverState> {
    let x = match warm {
        Some(w) => {
            if w.len() != instance.num_paths() {
                return Err(TeError::LengthMismatch {
                    what: "warm start",
                    expected: instance.num_paths(),
                    got: w.len(),
                });
            }
            if let Some(index) = w.iter().position(|v| !v.is_finite()) {
                return Err(TeError::NonFinite {
                    what: "warm start",
                    index,
                });
            }
            w.to_vec()
        }
        None => (0..instance.num_paths())
            .map(|r| {
                let c = instance.path_commodity(r);
                instance.demands()[c] / instance.commodity_paths(c).len() as f64
            })
            .collect(),
    };
    SolverState::from_rates(instance, x, config.beta0)
}

pub fn compute_residuals(prev: &SolverState, next: &SolverState) -> Residuals {
    let s = squared_distance(&prev.x, &next.x).sqrt();
    let r = prev
        .duals
        .families()
        .iter()
        .zip(next.duals.families())
        .map(|(a, b)| squared_distance(a, b))
        .sum::<f64>()
        .sqrt();
    Residuals { s, r }
}

/// Residual balancing. The comparison weighs the rate change by the
/// current β, which is the multiplier-space size of the dual residual when
/// duals are kept in scaled form; at β = 1 it reads `r > A·s` / `s > A·r`.
pub fn adapt_beta(beta: f64, residuals: &Residuals, config: &SolverConfig) -> f64 {
    let dual = beta * residuals.s;
    let next = if residuals.r > config.balance_ratio * dual {
        beta * config.beta_factor
    } else if dual > config.balance_ratio * residuals.r {
        beta / config.beta_factor
    } else {
        beta
    };
    next.clamp(config.beta_min, config.beta_max)
}

pub fn check_convergence(residuals: &Residuals, gamma: f64) -> bool {
    residuals.r <= gamma && residuals.s <= gamma
}

/// `iterations_at_alpha` counts the iterations run at the current α,
/// including this one; `alpha` is the current value.
pub fn advance_alpha(alpha: u32, target: AlphaTarget, converged: bool, iterations_at_alpha: usize) -> AlphaStep {
    if !converged {
        return AlphaStep::Continue;
    }
    if target == AlphaTarget::Finite(alpha) {
        return AlphaStep::Stop(StopReason::TargetReached);
    }
    // With a finite target the remaining increments are cheap (each
    // converges on its first iteration), so the stop is reserved for max-min.
    if target == AlphaTarget::MaxMin && alpha > 0 && iterations_at_alpha == 1 {
        return AlphaStep::Stop(StopReason::Stagnation);
    }
    match target {
        AlphaTarget::Finite(t) if alpha > t => AlphaStep::Stop(StopReason::TargetReached),
        _ => AlphaStep::Increment,
    }
}

/// Scratch arrays reused across iterations.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub levels: Vec<f64>,
    pub consensus: Vec<f64>,
    pub sums: Vec<f64>,
}

impl Workspace {
    pub fn new(instance: &Instance) -> Self {
        Workspace {
            levels: vec![0.0; instance.num_edges()],
            consensus: vec![0.0; instance.num_paths()],
            sums: vec![0.0; instance.num_commodities()],
        }
    }
}

/// One iteration from `cur` into `next` at `cur.alpha` and `cur.beta`.
pub fn iterate(
    exec: &Executor,
    instance: &Instance,
    cur: &SolverState,
    next: &mut SolverState,
    ws: &mut Workspace,
) -> Result<()> {
    next.beta = cur.beta;
    next.alpha = cur.alpha;
    next.k = cur.k + 1;
    update_duals(exec, instance, cur, &mut next.duals);
    update_rate_suggestions(exec, instance, &cur.x, &next.duals, &mut ws.levels, &mut next.y);
    // The sum search reads the previous x as its starting point.
    next.x.copy_from_slice(&cur.x);
    let alpha = cur.alpha as f64;
    solve_commodity_sums(exec, instance, next, alpha, &mut ws.consensus, &mut ws.sums)?;
    let mut x = std::mem::take(&mut next.x);
    update_rates(exec, instance, next, alpha, &ws.consensus, &ws.sums, &mut x);
    next.x = x;
    let mut slacks = std::mem::take(&mut next.slacks);
    update_slacks(exec, instance, next, &mut slacks);
    next.slacks = slacks;
    if let Some(i) = next.x.iter().position(|v| !v.is_finite()) {
        return Err(TeError::Diverged {
            iteration: next.k,
            what: format!("rate of path {i}"),
        });
    }
    Ok(())
}

/// Smallest positive water-filling commodity sum, or 1 if nothing can be
/// served.
pub fn default_unit(instance: &Instance) -> f64 {
    let m = crate::oracles::waterfill_baseline(instance)
        .sums
        .iter()
        .cloned()
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        m
    } else {
        1.0
    }
}

/// Optional per-iteration hooks beyond the plain trace.
#[derive(Default)]
pub struct SolveOptions<'a> {
    /// Reference commodity sums for the projected optimality column.
    pub reference: Option<&'a [f64]>,
    /// Floor for that optimality column.
    pub theta: Option<f64>,
    /// Resume from a previous solver state (solver units of `unit`).
    pub resume: Option<(&'a SolverState, f64)>,
}

/// Runs the continuation loop and projects the last iterate.
pub fn solve(instance: &Instance, config: &SolverConfig, warm_start: Option<&[f64]>) -> Result<SolveResult> {
    solve_with(instance, config, warm_start, &SolveOptions::default())
}

pub fn solve_with(
    instance: &Instance,
    config: &SolverConfig,
    warm_start: Option<&[f64]>,
    options: &SolveOptions,
) -> Result<SolveResult> {
    config.validate()?;
    let started = Instant::now();
    let exec = Executor::new(config.parallelism);
    let unit = match (config.unit, options.resume) {
        (Some(u), _) => u,
        (None, Some((_, old_unit))) => old_unit,
        (None, None) => default_unit(instance),
    };
    let scaled = instance.scaled(unit);

    let mut cur = match options.resume {
        Some((state, old_unit)) => {
            state.check_shape(instance)?;
            let mut s = state.clone();
            let f = old_unit / unit;
            for v in s.x.iter_mut().chain(s.y.iter_mut()) {
                *v *= f;
            }
            s.duals.rescale(f);
            s.beta = s.beta.clamp(config.beta_min, config.beta_max);
            s.k = 0;
            s
        }
        None => {
            let warm: Option<Vec<f64>> = warm_start.map(|w| w.iter().map(|v| v / unit).collect());
            initialize_state(&scaled, config, warm.as_deref())?
        }
    };
    let mut next = cur.clone();
    let mut ws = Workspace::new(&scaled);
    let mut trace = Vec::new();
    let mut at_alpha = 0usize;
    let mut stop = StopReason::MaxIterations;
    let mut converged = false;

    for _ in 0..config.max_iterations {
        iterate(&exec, &scaled, &cur, &mut next, &mut ws)?;
        at_alpha += 1;
        let res = compute_residuals(&cur, &next);
        if config.trace {
            trace.push(trace_row(instance, &scaled, &next, &res, unit, options));
        }
        let done = check_convergence(&res, config.gamma);
        let step = advance_alpha(next.alpha, config.alpha_target, done, at_alpha);
        std::mem::swap(&mut cur, &mut next);
        match step {
            AlphaStep::Stop(reason) => {
                stop = reason;
                converged = true;
                break;
            }
            AlphaStep::Increment => {
                cur.alpha += 1;
                at_alpha = 0;
            }
            AlphaStep::Continue => {}
        }
        if config.adaptive_beta && cur.k % config.adapt_interval.max(1) == 0 {
            let beta = adapt_beta(cur.beta, &res, config);
            if beta != cur.beta {
                cur.duals.rescale(cur.beta / beta);
                cur.beta = beta;
            }
        }
    }

    let alpha = cur.alpha;
    let physical: Vec<f64> = cur.x.iter().map(|v| v * unit).collect();
    let rates = project(instance, &physical, alpha as f64);
    let sums = instance.commodity_sums(&rates);
    let objective = objective(&sums, alpha as f64, 1e-12);
    Ok(SolveResult {
        rates,
        sums,
        iterations: cur.k,
        alpha,
        runtime_s: started.elapsed().as_secs_f64(),
        converged,
        stop,
        objective,
        trace,
        state: cur,
        unit,
    })
}

fn trace_row(
    instance: &Instance,
    scaled: &Instance,
    state: &SolverState,
    res: &Residuals,
    unit: f64,
    options: &SolveOptions,
) -> IterationTrace {
    let report = validate_allocation(scaled, &state.x).expect("state shaped for instance");
    let sums = scaled.commodity_sums(&state.x);
    let projected_optimality = options.reference.map(|reference| {
        let physical: Vec<f64> = state.x.iter().map(|v| v * unit).collect();
        let projected = project(instance, &physical, state.alpha as f64);
        let got = instance.commodity_sums(&projected);
        let theta = options
            .theta
            .unwrap_or_else(|| 1e-6 * instance.demands().iter().cloned().fold(0.0, f64::max));
        crate::oracles::optimality_of_sums(&got, reference, theta)
    });
    IterationTrace {
        k: state.k,
        alpha: state.alpha,
        beta: state.beta,
        s: res.s,
        r: res.r,
        objective: objective(&sums, state.alpha as f64, 1e-12),
        pct_constraints_violated: report.pct_constraints_violated,
        mean_relative_violation: report.mean_relative_violation,
        projected_optimality,
    }
}
