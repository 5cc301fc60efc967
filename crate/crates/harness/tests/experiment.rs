use std::fs;

use te_harness::experiment::*;

fn run(config: &str) -> (ExperimentReport, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, config).unwrap();
    let out = dir.path().join("out");
    let report = run_experiment(&path, &out).unwrap();
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    (report, csv)
}

const SINGLE: &str = r#"
solvers = ["waterfill", "gate"]
total_volume = 400.0
k = 1
[generate]
nodes = 6
seed = 2
"#;

#[test]
fn single_snapshot_two_rows() {
    let (report, csv) = run(SINGLE);
    assert_eq!(report.rows.len(), 2);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "snapshot,t_seconds,solver,runtime_s,iterations,optimality,dao,total_flow,converged");
    assert!(lines[1].starts_with("0,0,gate,"));
    assert!(lines[2].starts_with("0,0,waterfill,"));
    for r in &report.rows {
        assert!(r.optimality > 0.0 && r.optimality <= 1.0);
        assert!(r.total_flow > 0.0);
        // No stream: the state never drifts.
        assert_eq!(r.dao, r.optimality);
    }
    let gate = &report.rows[0];
    assert!(gate.iterations > 0 && gate.converged);
    assert_eq!(gate.runtime_s, gate.iterations as f64 * 1e-3);
}

#[test]
fn zero_drift_stream_dao_equals_optimality() {
    let cfg = format!("{SINGLE}[drift]\ncount = 3\ndemand_noise = 0.0\n");
    let (report, _) = run(&cfg);
    assert_eq!(report.rows.len(), 6);
    for r in &report.rows {
        assert_eq!(r.dao, r.optimality);
    }
}

#[test]
fn warm_previous_cuts_iterations_under_drift() {
    let cold = format!("{SINGLE}[drift]\ncount = 3\ndemand_noise = 0.03\nseed = 4\n");
    let warm = cold.replacen("k = 1", "k = 1\nwarm_start = \"previous\"", 1);
    let (c, _) = run(&cold);
    let (w, _) = run(&warm);
    let its = |r: &ExperimentReport| -> Vec<usize> {
        r.rows.iter().filter(|x| x.solver == "gate").map(|x| x.iterations).collect()
    };
    let (ci, wi) = (its(&c), its(&w));
    assert_eq!(ci[0], wi[0]);
    for s in 1..ci.len() {
        assert!(wi[s] < ci[s], "snapshot {s}: warm {} cold {}", wi[s], ci[s]);
    }
}

#[test]
fn multipath_reference_out_of_domain_is_skipped() {
    let cfg = SINGLE.replace("k = 1", "k = 3");
    let (report, csv) = run(&cfg);
    assert!(report.rows.is_empty());
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn gate_reference_on_multipath() {
    let cfg = SINGLE.replace("k = 1", "k = 3\nreference = \"gate\"");
    let (report, _) = run(&cfg);
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.rows[0].optimality, 1.0);
}

#[test]
fn traces_written_per_gate_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, format!("trace = true\n{SINGLE}")).unwrap();
    let report = run_experiment(&path, &dir.path().join("o")).unwrap();
    let trace = fs::read_to_string(dir.path().join("o/trace_0_gate.csv")).unwrap();
    assert_eq!(trace.lines().count(), report.rows[0].iterations + 1);
}

#[test]
fn files_resolve_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.csv"), "src,dst,capacity_mbps,weight,undirected\nA,B,10,1,1\nB,C,4,1,1\n").unwrap();
    fs::write(dir.path().join("d.csv"), "src,dst,demand_mbps\nA,C,20\nA,B,20\n").unwrap();
    fs::write(
        dir.path().join("s.json"),
        r#"[{"t_seconds": 0}, {"t_seconds": 12, "capacities": {"B→C": 2}}]"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("exp.toml"),
        "topology = \"t.csv\"\ndemands = \"d.csv\"\nsnapshots = \"s.json\"\nsolvers = [\"oracle-singlepath\"]\nk = 1\n",
    )
    .unwrap();
    let report = run_experiment(&dir.path().join("exp.toml"), &dir.path().join("o")).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.optimality == 1.0));
    assert_eq!(report.rows[0].total_flow, 10.0);
    assert_eq!(report.rows[1].total_flow, 10.0);
}

#[test]
fn config_errors() {
    for bad in [
        "solvers = []\ntotal_volume = 1.0\n[generate]\nnodes = 3\n",
        "solvers = [\"gate\"]\n[generate]\nnodes = 3\n",
        "solvers = [\"nope\"]\ntotal_volume = 1.0\n[generate]\nnodes = 3\n",
        "solvers = [\"gate\"]\ntotal_volume = 1.0\nbogus = 1\n[generate]\nnodes = 3\n",
    ] {
        assert!(ExperimentConfig::from_toml(bad).is_err(), "{bad}");
    }
}
