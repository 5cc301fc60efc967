use super::sums::inv_pow;
use super::SolverState;
use crate::exec::Executor;
use crate::model::Instance;

/// Minimiser of the rate block for one path given the commodity's
/// marginal term `t`: `(K + t)/n` when that is at least `neg`, otherwise
/// `(K + t + neg)/(n + 1)` (the sign hinge engaged).
pub fn path_rate(consensus: f64, hops: f64, neg: f64, t: f64) -> f64 {
    let free = consensus + t;
    if free >= hops * neg {
        free / hops
    } else {
        (free + neg) / (hops + 1.0)
    }
}

/// Path rates from the commodity sums `sums` (roots of the summed
/// stationarity), `consensus` holding `K_r` as filled by
/// [`super::solve_commodity_sums`]. Summing the output over a commodity
/// reproduces its entry of `sums`.
pub fn update_rates(
    exec: &Executor,
    instance: &Instance,
    state: &SolverState,
    alpha: f64,
    consensus: &[f64],
    sums: &[f64],
    x: &mut [f64],
) {
    let demands = instance.demands();
    let beta = state.beta;
    let duals = &state.duals;
    exec.fill(x, |r| {
        let c = instance.path_commodity(r);
        let s = sums[c];
        let t = inv_pow(s, alpha) / beta - (s - (demands[c] - duals.dem[c])).max(0.0);
        path_rate(consensus[r], instance.path_len(r) as f64, duals.neg[r], t)
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::solve_commodity_sums;
    use crate::model::fixtures::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_hop_halves_with_sign_hinge() {
        // n = 1, K + t = −2 < 0 = n·neg: engaged branch divides by 2.
        assert_eq!(path_rate(0.0, 1.0, 0.0, -2.0), -1.0);
        assert_eq!(path_rate(1.0, 1.0, 0.0, 3.0), 4.0);
        assert_eq!(path_rate(2.0, 2.0, 1.0, 0.0), 1.0);
    }

    #[test]
    fn symmetric_commodity_splits_evenly() {
        let inst = diamond([10.0; 4], 12.0);
        let state = SolverState::from_rates(&inst, vec![3.0, 3.0], 1.0).unwrap();
        let exec = Executor::sequential();
        let mut k = vec![0.0; 2];
        let mut sums = vec![0.0; 1];
        solve_commodity_sums(&exec, &inst, &state, 1.0, &mut k, &mut sums).unwrap();
        let mut x = vec![0.0; 2];
        update_rates(&exec, &inst, &state, 1.0, &k, &sums, &mut x);
        assert_eq!(x[0], x[1]);
        assert!((x[0] - sums[0] / 2.0).abs() < 1e-14);
    }

    #[test]
    fn rates_sum_to_commodity_sums() {
        let inst = shared_edge(3, 10.0, &[4.0, 8.0, 12.0]);
        let exec = Executor::sequential();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x0: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..10.0)).collect();
            let mut state = SolverState::from_rates(&inst, x0, rng.gen_range(0.01..10.0)).unwrap();
            for v in state.y.iter_mut() {
                *v = rng.gen_range(0.0..10.0);
            }
            for v in state.duals.con.iter_mut() {
                *v = rng.gen_range(-3.0..3.0);
            }
            for v in state.duals.dem.iter_mut().chain(state.duals.neg.iter_mut()) {
                *v = rng.gen_range(0.0..3.0);
            }
            for alpha in [0.0, 1.0, 2.0, 4.0] {
                let mut k = vec![0.0; 3];
                let mut sums = vec![0.0; 3];
                solve_commodity_sums(&exec, &inst, &state, alpha, &mut k, &mut sums).unwrap();
                let mut x = vec![0.0; 3];
                update_rates(&exec, &inst, &state, alpha, &k, &sums, &mut x);
                for c in 0..3 {
                    let total = inst.commodity_sum(&x, c);
                    assert!((total - sums[c]).abs() <= 1e-8 * sums[c].abs().max(1e-300));
                }
            }
        }
    }
}
