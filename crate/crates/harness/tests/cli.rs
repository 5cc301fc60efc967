use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn te(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_te")).current_dir(dir).args(args).output().unwrap()
}

fn setup(dir: &Path) {
    fs::write(dir.join("t.csv"), "src,dst,capacity_mbps,weight\nA,B,10,1\nB,C,5,1\n").unwrap();
    fs::write(dir.join("d.csv"), "src,dst,demand_mbps\nA,B,100\nA,C,100\nB,C,100\n").unwrap();
}

#[test]
fn solve_chain_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let out = te(dir.path(), &["solve", "--topology", "t.csv", "--demands", "d.csv", "--k", "1", "--out", "a.csv", "--trace", "tr.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = te(dir.path(), &["oracle", "--topology", "t.csv", "--demands", "d.csv", "--k", "1", "--method", "maxmin-singlepath", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let r = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(r.contains("0,A→B,7.5\n") && r.contains("1,A→C,2.5\n") && r.contains("2,B→C,2.5\n"), "{r}");
    let out = te(dir.path(), &["metrics", "--alloc", "a.csv", "--ref", "r.csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: f64 = text.trim().strip_prefix("optimality,").unwrap().parse().unwrap();
    assert!(v > 0.98, "{v}");
    let trace = fs::read_to_string(dir.path().join("tr.csv")).unwrap();
    assert!(trace.starts_with("k,alpha,beta,s,r,"));
}

#[test]
fn unconverged_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let out = te(dir.path(), &["solve", "--topology", "t.csv", "--demands", "d.csv", "--k", "1", "--max-iterations", "3", "--out", "a.csv"]);
    assert_eq!(out.status.code(), Some(3));
    // Still a complete allocation.
    assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap().lines().count(), 5);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    fs::write(dir.path().join("bad.csv"), "src,dst,demand_mbps\nA,A,1\n").unwrap();
    fs::write(dir.path().join("t2.csv"), "src,dst,capacity_mbps,weight\nA,B,10,1\nB,C,5,1\nA,C,5,3\n").unwrap();
    for args in [
        vec!["solve", "--topology", "missing.csv", "--demands", "d.csv"],
        vec!["solve", "--topology", "t.csv", "--demands", "bad.csv"],
        vec!["oracle", "--topology", "t2.csv", "--demands", "d.csv", "--k", "2", "--method", "maxmin-singlepath"],
        vec!["solve", "--topology", "t.csv", "--demands", "d.csv", "--gamma", "-1"],
    ] {
        let out = te(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn generators_feed_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(te(d, &["gen-topology", "--nodes", "5", "--seed", "1", "--out", "t.csv"]).status.success());
    assert!(te(d, &["gen-demands", "--topology", "t.csv", "--total-volume", "100", "--out", "d.csv"]).status.success());
    assert!(te(d, &["gen-paths", "--topology", "t.csv", "--demands", "d.csv", "--k", "2", "--out", "p.json"]).status.success());
    let out = te(d, &["solve", "--topology", "t.csv", "--demands", "d.csv", "--paths", "p.json", "--alpha-target", "1"]);
    assert!(matches!(out.status.code(), Some(0) | Some(3)));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("path_id,commodity,rate_mbps\n"));
}

#[test]
fn experiment_subcommand_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.toml"), "solvers = [\"waterfill\"]\ntotal_volume = 50.0\nk = 1\n[generate]\nnodes = 4\n").unwrap();
    let out = te(dir.path(), &["experiment", "--config", "e.toml", "--out-dir", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("o/results.csv")).unwrap().lines().count(), 2);
}
