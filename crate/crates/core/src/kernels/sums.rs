use super::rates::path_rate;
use super::SolverState;
use crate::error::{Result, TeError};
use crate::exec::Executor;
use crate::model::Instance;
use crate::reduce::pairwise_sum_by;

/// Left end of the root bracket for `α > 0`.
pub const SUM_LOWER_BOUND: f64 = 1e-12;
pub const SUM_MAX_ITERATIONS: usize = 200;
/// Acceptance threshold on `|f(S)| / max(1, |offset|)`.
pub const SUM_TOLERANCE: f64 = 1e-10;

/// `f(S) = slope·S − pull·S^(−α) − offset`, strictly increasing on `S > 0`
/// when `slope > 0` and `pull ≥ 0`.
///
/// With `w_r = 1/(1 + n_r)` and `W = Σ w_r`, the summed path-rate update
/// of a commodity gives `slope = 1 + W`, `pull = W/β` and `offset = Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumEquation {
    pub slope: f64,
    pub pull: f64,
    pub offset: f64,
    pub alpha: f64,
}

impl SumEquation {
    pub fn eval(&self, s: f64) -> f64 {
        self.slope * s - self.pull * inv_pow(s, self.alpha) - self.offset
    }

    fn derivative(&self, s: f64) -> f64 {
        self.slope + self.alpha * self.pull * inv_pow(s, self.alpha) / s
    }

    fn scale(&self) -> f64 {
        self.offset.abs().max(1.0)
    }
}

/// `s^(−α)`, exact at the integer exponents the continuation uses.
pub(crate) fn inv_pow(s: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if alpha == 1.0 {
        1.0 / s
    } else if alpha.fract() == 0.0 && alpha <= i32::MAX as f64 {
        s.powi(-(alpha as i32))
    } else {
        s.powf(-alpha)
    }
}

/// Positive root of `eq` to within [`SUM_TOLERANCE`].
///
/// `α = 0` is solved in closed form (and may be non-positive), `α = 1` by
/// the quadratic formula, anything else by Newton steps safeguarded by
/// bisection on `[SUM_LOWER_BOUND, hi]`, `hi` doubled from
/// `max(1, offset/slope)` until `f(hi) ≥ 0`.
pub fn solve_sum_equation(eq: &SumEquation) -> std::result::Result<f64, &'static str> {
    solve_to(eq, SUM_TOLERANCE)
}

/// As [`solve_sum_equation`] but with `tolerance = 0`, iterating until the
/// bracket or the Newton step stops moving.
fn solve_to(eq: &SumEquation, tolerance: f64) -> std::result::Result<f64, &'static str> {
    let SumEquation {
        slope: a,
        pull: b,
        offset: q,
        alpha,
    } = *eq;
    if !(a.is_finite() && b.is_finite() && q.is_finite() && alpha.is_finite()) {
        return Err("non-finite coefficient");
    }
    if a <= 0.0 || b < 0.0 || alpha < 0.0 {
        return Err("coefficients outside the monotone regime");
    }
    if alpha == 0.0 {
        return Ok((q + b) / a);
    }
    if b == 0.0 {
        return Ok((q / a).max(SUM_LOWER_BOUND));
    }
    if alpha == 1.0 {
        // a S² − q S − b = 0; pick the cancellation-free form.
        let disc = (q * q + 4.0 * a * b).sqrt();
        let s = if q >= 0.0 {
            (q + disc) / (2.0 * a)
        } else {
            2.0 * b / (disc - q)
        };
        return Ok(s.max(SUM_LOWER_BOUND));
    }

    let threshold = tolerance * eq.scale();
    let mut lo = SUM_LOWER_BOUND;
    if eq.eval(lo) >= 0.0 {
        return Ok(lo);
    }
    let mut hi = (q / a).max(1.0);
    let mut f_hi = eq.eval(hi);
    while f_hi < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err("no sign change in bracket");
        }
        f_hi = eq.eval(hi);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }

    let mut s = hi;
    let mut fs = f_hi;
    let mut last_step = hi - lo;
    for _ in 0..SUM_MAX_ITERATIONS {
        if fs.abs() <= threshold {
            return Ok(s);
        }
        if fs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - fs / eq.derivative(s);
        let productive = (fs / eq.derivative(s)).abs() * 2.0 <= last_step.abs();
        let next = if newton > lo && newton < hi && productive {
            newton
        } else if hi > 16.0 * lo {
            // Geometric midpoint: the bracket starts many decades wide.
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if next == s || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(s);
        }
        last_step = next - s;
        s = next;
        fs = eq.eval(s);
        if fs == 0.0 {
            return Ok(s);
        }
    }
    Ok(s)
}

/// Stationarity data of one commodity in the rate block.
///
/// Path `r` of the commodity follows `x_r(t) = (K_r + t)/n_r` while that
/// stays at or above `w_r = dual_neg_r`, and `(K_r + t + w_r)/(n_r + 1)`
/// below it, where `t(S) = S^(−α)/β − [S − (D − dual_dem)]₊` is the shared
/// marginal term. The commodity sum is the root of `S − Σ_r x_r(t(S))`.
#[derive(Debug, Clone, Copy)]
pub struct CommodityBlock<'a> {
    pub instance: &'a Instance,
    pub commodity: usize,
    /// `K_r = Σ_{e∈r}(y_er − dual_con_er)` per path (global path index).
    pub consensus: &'a [f64],
    /// `dual_neg` per path (global path index).
    pub neg: &'a [f64],
    /// `D_c − dual_dem_c`.
    pub target: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl CommodityBlock<'_> {
    pub fn marginal(&self, s: f64) -> f64 {
        inv_pow(s, self.alpha) / self.beta - (s - self.target).max(0.0)
    }

    /// Path rate of `r` at sum `s`.
    pub fn rate(&self, r: usize, s: f64) -> f64 {
        path_rate(
            self.consensus[r],
            self.instance.path_len(r) as f64,
            self.neg[r],
            self.marginal(s),
        )
    }

    /// `S − Σ x_r(t(S))`; strictly increasing.
    pub fn residual(&self, s: f64) -> f64 {
        let paths = self.instance.commodity_paths(self.commodity);
        s - pairwise_sum_by(paths.len(), |i| self.rate(paths.start + i, s))
    }

    /// The smooth piece of the residual around `s`: branch choices of
    /// every path and of the demand hinge frozen at their value at `s`.
    pub fn equation_at(&self, s: f64) -> SumEquation {
        let paths = self.instance.commodity_paths(self.commodity);
        let t = self.marginal(s);
        let below = |r: usize| {
            let n = self.instance.path_len(r) as f64;
            self.consensus[r] + t < n * self.neg[r]
        };
        let m = |r: usize| self.instance.path_len(r) as f64 + if below(r) { 1.0 } else { 0.0 };
        let w = pairwise_sum_by(paths.len(), |i| 1.0 / m(paths.start + i));
        let q0 = pairwise_sum_by(paths.len(), |i| {
            let r = paths.start + i;
            let lifted = if below(r) { self.neg[r] } else { 0.0 };
            (self.consensus[r] + lifted) / m(r)
        });
        let demand_active = s > self.target;
        SumEquation {
            slope: 1.0 + if demand_active { w } else { 0.0 },
            pull: w / self.beta,
            offset: q0 + if demand_active { w * self.target } else { 0.0 },
            alpha: self.alpha,
        }
    }
}

/// Root of [`CommodityBlock::residual`] by an active-set iteration: solve
/// the smooth piece at the guess, accept once the solution lies on that
/// same piece, otherwise move to it (or bisect if it leaves the bracket of
/// evaluated signs).
pub fn commodity_sum_root(block: &CommodityBlock, guess: f64) -> Result<f64> {
    let err = |reason: &str| TeError::RootSolver {
        commodity: block.commodity,
        reason: reason.to_string(),
    };
    let positive = block.alpha > 0.0;
    let mut lo = if positive { 0.0 } else { f64::NEG_INFINITY };
    let mut hi = f64::INFINITY;
    let mut s = if guess.is_finite() && (!positive || guess > 0.0) {
        guess
    } else {
        block.target.max(1.0)
    };

    for _ in 0..SUM_MAX_ITERATIONS {
        let fs = block.residual(s);
        if !fs.is_finite() {
            return Err(err("non-finite residual"));
        }
        if fs == 0.0 {
            return Ok(s);
        }
        if fs < 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        let eq = block.equation_at(s);
        let cand = solve_to(&eq, 0.0).map_err(err)?;
        if block.equation_at(cand) == eq {
            return Ok(cand);
        }
        s = if cand > lo && cand < hi {
            cand
        } else if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if hi.is_finite() {
            hi - (hi.abs() + 1.0)
        } else {
            2.0 * lo.abs() + 1.0
        };
    }

    // The pieces did not settle; finish on the monotone residual directly.
    while !hi.is_finite() {
        let s = 2.0 * lo.abs() + 1.0;
        if block.residual(s) >= 0.0 {
            hi = s;
        } else {
            lo = s;
        }
    }
    while !lo.is_finite() {
        let s = hi - (hi.abs() + 1.0);
        if block.residual(s) <= 0.0 {
            lo = s;
        } else {
            hi = s;
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if block.residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `K_r = Σ_{e∈r}(y_er − dual_con_er)` for every path.
pub fn consensus_terms(exec: &Executor, instance: &Instance, state: &SolverState, out: &mut [f64]) {
    exec.fill(out, |r| {
        let pairs = instance.path_pairs(r);
        pairwise_sum_by(pairs.len(), |i| {
            let p = pairs.start + i;
            state.y[p] - state.duals.con[p]
        })
    });
}

/// Commodity sums of the rate block, given `y` and duals already advanced
/// this iteration. `consensus` receives `K_r`; the previous commodity sums
/// of `state.x` seed the active-set search.
pub fn solve_commodity_sums(
    exec: &Executor,
    instance: &Instance,
    state: &SolverState,
    alpha: f64,
    consensus: &mut [f64],
    sums: &mut [f64],
) -> Result<()> {
    consensus_terms(exec, instance, state, consensus);
    let consensus = &*consensus;
    let demands = instance.demands();
    exec.try_fill(sums, |c| {
        let block = CommodityBlock {
            instance,
            commodity: c,
            consensus,
            neg: &state.duals.neg,
            target: demands[c] - state.duals.dem[c],
            beta: state.beta,
            alpha,
        };
        commodity_sum_root(&block, instance.commodity_sum(&state.x, c))
    })
}
