use proptest::prelude::*;
use te_core::controller::{solve, solve_with, SolveOptions, SolverConfig, StopReason};
use te_core::model::fixtures::{chain, diamond, shared_edge, single_edge};
use te_core::{validate_allocation, AlphaTarget, Parallelism};

#[test]
fn spec_examples() {
    let cfg = SolverConfig::default();
    let r = solve(&single_edge(10.0, 20.0), &cfg, None).unwrap();
    assert!((r.rates[0] - 10.0).abs() <= 0.1);
    let r = solve(&shared_edge(2, 10.0, &[20.0, 20.0]), &cfg, None).unwrap();
    assert!((r.rates[0] - 5.0).abs() <= 0.1 && (r.rates[1] - 5.0).abs() <= 0.1, "{:?}", r.rates);
    let r = solve(&chain(100.0), &cfg, None).unwrap();
    for (got, want) in r.rates.iter().zip([7.5, 2.5, 2.5]) {
        assert!((got - want).abs() <= 0.15, "{:?}", r.rates);
    }
}

#[test]
fn finite_target_stops_at_target() {
    let cfg = SolverConfig { alpha_target: AlphaTarget::Finite(2), ..Default::default() };
    let r = solve(&chain(100.0), &cfg, None).unwrap();
    assert_eq!(r.stop, StopReason::TargetReached);
    assert_eq!(r.alpha, 2);
}

#[test]
fn trace_rows_match_iterations_and_reference_column() {
    let inst = diamond([4.0, 8.0, 6.0, 5.0], 20.0);
    let reference = [9.0];
    let cfg = SolverConfig { trace: true, ..Default::default() };
    let r = solve_with(&inst, &cfg, None, &SolveOptions { reference: Some(&reference), ..Default::default() }).unwrap();
    assert_eq!(r.trace.len(), r.iterations);
    for (i, row) in r.trace.iter().enumerate() {
        assert_eq!(row.k, i + 1);
        let p = row.projected_optimality.unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    assert!(r.trace.windows(2).all(|w| w[1].alpha >= w[0].alpha));
}

#[test]
fn resume_from_converged_state_stops_immediately() {
    let inst = chain(100.0);
    let cfg = SolverConfig::default();
    let first = solve(&inst, &cfg, None).unwrap();
    let again = solve_with(&inst, &cfg, None, &SolveOptions { resume: Some((&first.state, first.unit)), ..Default::default() }).unwrap();
    assert!(again.iterations <= 2, "{}", again.iterations);
    assert_eq!(again.stop, StopReason::Stagnation);
}

#[test]
fn threaded_solve_matches_sequential() {
    let demands: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
    let inst = shared_edge(40, 100.0, &demands);
    let seq = solve(&inst, &SolverConfig::default(), None).unwrap();
    let cfg = SolverConfig { parallelism: Parallelism::Threads(3), ..Default::default() };
    let par = solve(&inst, &cfg, None).unwrap();
    assert_eq!(seq.rates, par.rates);
    assert_eq!(seq.iterations, par.iterations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_feasible_even_when_cut_short(
        caps in prop::collection::vec(0.5f64..20.0, 4),
        demand in 0.5f64..30.0,
        iterations in 1usize..40,
        alpha in 0u32..3,
    ) {
        let inst = diamond([caps[0], caps[1], caps[2], caps[3]], demand);
        let cfg = SolverConfig { alpha_target: AlphaTarget::Finite(alpha), max_iterations: iterations, ..Default::default() };
        let r = solve(&inst, &cfg, None).unwrap();
        prop_assert!(validate_allocation(&inst, &r.rates).unwrap().is_feasible());
        prop_assert!(r.iterations <= iterations);
    }
}
