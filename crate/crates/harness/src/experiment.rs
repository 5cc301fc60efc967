//! Snapshot-by-snapshot experiment runs reported as CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Deserialize;
use te_core::controller::{solve_with, IterationTrace, SolveOptions, SolveResult, SolverConfig};
use te_core::model::{build_instance, Instance};
use te_core::oracles::{
    dao_evaluate, default_theta, exact_maxmin_singlepath, optimality_metric, waterfill_baseline, Allocation,
};
use te_core::kernels::SolverState;
use te_core::TeError;
use thiserror::Error;

use crate::gen::{gravity_demands, k_shortest_paths, RandomTopology};
use crate::io::{self, InputError};
use crate::stream::{make_drift_stream, state_at, DriftStream, Snapshot, StreamError, SyntheticDrift};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Model(#[from] TeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Gate,
    Waterfill,
    OracleSinglepath,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Gate => "gate",
            SolverKind::Waterfill => "waterfill",
            SolverKind::OracleSinglepath => "oracle-singlepath",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarmStart {
    #[default]
    None,
    /// Resume GATE from its final state on the previous solved snapshot.
    Previous,
}

/// How `runtime_s` is measured. The modeled clock charges a fixed cost
/// per iteration, which keeps runtimes (and therefore DAO, whose drift
/// horizon is the runtime) reproducible bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    #[default]
    Modeled,
    Wall,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateTopology {
    pub nodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub extra_links_per_node: Option<f64>,
    #[serde(default)]
    pub capacities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Topology CSV; relative paths resolve against the config file.
    pub topology: Option<PathBuf>,
    pub generate: Option<GenerateTopology>,
    /// Demands CSV, or gravity demands of `total_volume`.
    pub demands: Option<PathBuf>,
    pub total_volume: Option<f64>,
    pub paths: Option<PathBuf>,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Snapshot overrides JSON, or a synthetic `[drift]` series.
    pub snapshots: Option<PathBuf>,
    pub drift: Option<SyntheticDrift>,
    /// Solve every n-th snapshot.
    #[serde(default = "one")]
    pub solve_every: usize,
    pub solvers: Vec<SolverKind>,
    #[serde(default = "default_reference")]
    pub reference: SolverKind,
    #[serde(default)]
    pub warm_start: WarmStart,
    #[serde(default)]
    pub clock: Clock,
    #[serde(default = "default_spi")]
    pub seconds_per_iteration: f64,
    pub theta: Option<f64>,
    /// Write one trace CSV per GATE solve.
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_k() -> usize {
    4
}

fn one() -> usize {
    1
}

fn default_reference() -> SolverKind {
    SolverKind::OracleSinglepath
}

fn default_spi() -> f64 {
    1e-3
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.topology.is_some() == self.generate.is_some() {
            return bad("give exactly one of topology and [generate]");
        }
        if self.demands.is_some() == self.total_volume.is_some() {
            return bad("give exactly one of demands and total_volume");
        }
        if self.snapshots.is_some() && self.drift.is_some() {
            return bad("give at most one of snapshots and [drift]");
        }
        if self.solvers.is_empty() {
            return bad("solvers is empty");
        }
        if self.k == 0 || self.solve_every == 0 {
            return bad("k and solve_every must be at least 1");
        }
        if !(self.seconds_per_iteration.is_finite() && self.seconds_per_iteration >= 0.0) {
            return bad("seconds_per_iteration must be finite and non-negative");
        }
        if let Some(t) = self.theta {
            if !(t.is_finite() && t > 0.0) {
                return bad("theta must be positive");
            }
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub snapshot: usize,
    pub t_seconds: f64,
    pub solver: &'static str,
    pub runtime_s: f64,
    pub iterations: usize,
    pub optimality: f64,
    pub dao: f64,
    pub total_flow: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    /// Sorted by snapshot, then solver name.
    pub rows: Vec<ReportRow>,
    /// Snapshots whose reference could not be computed.
    pub skipped: Vec<(usize, String)>,
    /// `(snapshot, trace)` of every GATE solve, when tracing.
    pub traces: Vec<(usize, Vec<IterationTrace>)>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snapshot,t_seconds,solver,runtime_s,iterations,optimality,dao,total_flow,converged\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.snapshot, r.t_seconds, r.solver, r.runtime_s, r.iterations, r.optimality, r.dao, r.total_flow, r.converged
            );
        }
        out
    }
}

pub fn trace_csv(trace: &[IterationTrace]) -> String {
    let mut out =
        String::from("k,alpha,beta,s,r,objective,pct_constraints_violated,mean_relative_violation,projected_optimality\n");
    for t in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            t.k,
            t.alpha,
            t.beta,
            t.s,
            t.r,
            t.objective,
            t.pct_constraints_violated,
            t.mean_relative_violation,
            t.projected_optimality.map(|v| v.to_string()).unwrap_or_default()
        );
    }
    out
}

/// Base instance plus the snapshot series it drifts through.
pub struct Prepared {
    pub instance: Instance,
    pub stream: Option<DriftStream>,
    pub snapshots: Vec<Snapshot>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn prepare(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Prepared, ExperimentError> {
    let topology = match (&cfg.topology, &cfg.generate) {
        (Some(p), _) => {
            let p = resolve(base_dir, p);
            io::parse_topology(&p.display().to_string(), &io::read_file(&p)?)?
        }
        (None, Some(g)) => {
            let mut spec = RandomTopology { nodes: g.nodes, seed: g.seed, ..Default::default() };
            if let Some(x) = g.extra_links_per_node {
                spec.extra_links_per_node = x;
            }
            if let Some(c) = &g.capacities {
                spec.capacities = c.clone();
            }
            spec.generate()?
        }
        (None, None) => unreachable!("validated"),
    };
    let commodities = match (&cfg.demands, cfg.total_volume) {
        (Some(p), _) => {
            let p = resolve(base_dir, p);
            io::parse_demands(&p.display().to_string(), &io::read_file(&p)?, &topology)?
        }
        (None, Some(v)) => gravity_demands(&topology, v)?,
        (None, None) => unreachable!("validated"),
    };
    let paths = match &cfg.paths {
        Some(p) => {
            let p = resolve(base_dir, p);
            io::parse_paths(&p.display().to_string(), &io::read_file(&p)?, &topology, &commodities)?
        }
        None => k_shortest_paths(&topology, &commodities, cfg.k),
    };
    let instance = build_instance(topology, commodities, paths)?;
    let first = Snapshot::of(&instance, 0.0);
    let snapshots = match (&cfg.snapshots, &cfg.drift) {
        (Some(p), _) => {
            let p = resolve(base_dir, p);
            let overrides = io::parse_snapshots(&p.display().to_string(), &io::read_file(&p)?, &instance)?;
            let base = Snapshot::of(&instance, overrides.first().map(|o| o.t_seconds).unwrap_or(0.0));
            overrides.iter().map(|o| Snapshot::overridden(&base, o)).collect()
        }
        (None, Some(d)) => d.snapshots(&first),
        (None, None) => vec![first],
    };
    if snapshots.is_empty() {
        return Err(ExperimentError::Config("snapshot series is empty".into()));
    }
    let stream = if snapshots.len() >= 2 { Some(make_drift_stream(snapshots.clone())?) } else { None };
    Ok(Prepared { instance, stream, snapshots })
}

struct Outcome {
    rates: Vec<f64>,
    iterations: usize,
    converged: bool,
    runtime_s: f64,
    state: Option<(SolverState, f64)>,
    trace: Vec<IterationTrace>,
}

fn run_solver(
    kind: SolverKind,
    instance: &Instance,
    cfg: &ExperimentConfig,
    resume: Option<&(SolverState, f64)>,
) -> Result<Outcome, ExperimentError> {
    let started = Instant::now();
    let mut out = match kind {
        SolverKind::Gate => {
            let mut solver = cfg.solver.clone();
            solver.trace = solver.trace || cfg.trace;
            let options = SolveOptions { resume: resume.map(|(s, u)| (s, *u)), ..Default::default() };
            let res: SolveResult = solve_with(instance, &solver, None, &options)?;
            Outcome {
                rates: res.rates,
                iterations: res.iterations,
                converged: res.converged,
                runtime_s: 0.0,
                state: Some((res.state, res.unit)),
                trace: res.trace,
            }
        }
        SolverKind::Waterfill => Outcome {
            rates: waterfill_baseline(instance).rates,
            iterations: 0,
            converged: true,
            runtime_s: 0.0,
            state: None,
            trace: Vec::new(),
        },
        SolverKind::OracleSinglepath => Outcome {
            rates: exact_maxmin_singlepath(instance)?.rates,
            iterations: 0,
            converged: true,
            runtime_s: 0.0,
            state: None,
            trace: Vec::new(),
        },
    };
    out.runtime_s = match cfg.clock {
        Clock::Wall => started.elapsed().as_secs_f64(),
        Clock::Modeled => out.iterations as f64 * cfg.seconds_per_iteration,
    };
    Ok(out)
}

fn reference(kind: SolverKind, instance: &Instance, cfg: &ExperimentConfig) -> Result<Allocation, ExperimentError> {
    let rates = match kind {
        SolverKind::Gate => {
            let mut solver = cfg.solver.clone();
            solver.trace = false;
            solve_with(instance, &solver, None, &SolveOptions::default())?.rates
        }
        SolverKind::Waterfill => waterfill_baseline(instance).rates,
        SolverKind::OracleSinglepath => exact_maxmin_singlepath(instance)?.rates,
    };
    Ok(Allocation::new(instance, rates, kind.name()))
}

/// Runs every configured solver on every scheduled snapshot. Optimality is
/// scored against the reference at the snapshot; DAO applies the allocation
/// to the state reached `runtime_s` later and scores it against the
/// reference there.
pub fn run_prepared(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::default();
    let mut previous: Option<(SolverState, f64)> = None;
    let mut solvers = cfg.solvers.clone();
    solvers.sort_by_key(|s| s.name());
    solvers.dedup();
    for (i, snap) in prepared.snapshots.iter().enumerate().step_by(cfg.solve_every) {
        let instance = snap.instance(&prepared.instance)?;
        let theta = cfg.theta.unwrap_or_else(|| default_theta(&instance));
        let opt = match reference(cfg.reference, &instance, cfg) {
            Ok(a) => a,
            Err(ExperimentError::Model(TeError::OracleDomain(m))) => {
                report.skipped.push((i, m));
                continue;
            }
            Err(e) => return Err(e),
        };
        for &kind in &solvers {
            let resume = match (kind, cfg.warm_start) {
                (SolverKind::Gate, WarmStart::Previous) => previous.as_ref(),
                _ => None,
            };
            let out = run_solver(kind, &instance, cfg, resume)?;
            let alloc = Allocation::new(&instance, out.rates.clone(), kind.name());
            let optimality = optimality_metric(&alloc, &opt, theta)?;
            let later_snap = match &prepared.stream {
                Some(stream) => state_at(stream, i, snap.t_seconds + out.runtime_s)?,
                None => snap.clone(),
            };
            let later = later_snap.instance(&prepared.instance)?;
            let drifted = later_snap.demands != snap.demands || later_snap.capacities != snap.capacities;
            let dao = if !drifted {
                dao_evaluate(&alloc, &later, &opt, theta)?
            } else {
                let later_opt = reference(cfg.reference, &later, cfg)?;
                dao_evaluate(&alloc, &later, &later_opt, theta)?
            };
            report.rows.push(ReportRow {
                snapshot: i,
                t_seconds: snap.t_seconds,
                solver: kind.name(),
                runtime_s: out.runtime_s,
                iterations: out.iterations,
                optimality,
                dao,
                total_flow: alloc.sums.iter().sum(),
                converged: out.converged,
            });
            if kind == SolverKind::Gate {
                if cfg.trace {
                    report.traces.push((i, out.trace));
                }
                previous = out.state;
            }
        }
    }
    Ok(report)
}

/// Loads `config_path`, runs it and writes `results.csv` (plus trace files)
/// into `out_dir`.
pub fn run_experiment(config_path: &Path, out_dir: &Path) -> Result<ExperimentReport, ExperimentError> {
    let cfg = ExperimentConfig::from_toml(&io::read_file(config_path)?)?;
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let prepared = prepare(&cfg, base_dir)?;
    let report = run_prepared(&cfg, &prepared)?;
    std::fs::create_dir_all(out_dir).map_err(|source| InputError::Io { file: out_dir.to_path_buf(), source })?;
    io::write_file(&out_dir.join("results.csv"), &report.to_csv())?;
    for (i, trace) in &report.traces {
        io::write_file(&out_dir.join(format!("trace_{i}_gate.csv")), &trace_csv(trace))?;
    }
    Ok(report)
}
