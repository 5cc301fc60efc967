use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use te_core::controller::{solve_with, SolveOptions};
use te_core::model::{build_instance, Commodity, Instance, PathSet, Topology};
use te_core::oracles::{
    exact_bruteforce_tiny, exact_maxmin_singlepath, optimality_of_sums, waterfill_baseline, GridObjective,
};
use te_core::{AlphaTarget, Parallelism, SolverConfig, TeError};
use te_harness::experiment::{run_experiment, trace_csv, ExperimentError};
use te_harness::gen::{gravity_demands, k_shortest_paths, RandomTopology};
use te_harness::io::{self, AllocationFooter, InputError};

#[derive(Parser)]
#[command(name = "te", version, about = "α-fair traffic-engineering solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct InstanceArgs {
    /// Topology CSV (`src,dst,capacity_mbps,weight[,undirected]`).
    #[arg(long)]
    topology: PathBuf,
    /// Demands CSV (`src,dst,demand_mbps`).
    #[arg(long)]
    demands: PathBuf,
    /// Paths JSON; when absent, k shortest paths are computed.
    #[arg(long)]
    paths: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    k: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the allocation CSV.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value = "max-min")]
        alpha_target: AlphaTarget,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        beta0: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Keep β fixed at beta0.
        #[arg(long)]
        fixed_beta: bool,
        /// Worker threads for the kernels (0 = all cores); sequential when absent.
        #[arg(long)]
        threads: Option<usize>,
        /// Allocation CSV whose rates seed the iterate.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Per-iteration trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Allocation CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random topology CSV (spanning tree plus extra links, bidirectional).
    GenTopology {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gravity-model demands CSV for a topology.
    GenDemands {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        total_volume: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-shortest-paths JSON for a topology and demands.
    GenPaths {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        demands: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config and write results.csv into out-dir.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Baseline or exact reference allocation.
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum)]
        method: OracleMethod,
        /// Objective for the grid oracle: an integer α or max-min.
        #[arg(long, default_value = "max-min")]
        alpha: AlphaTarget,
        /// Grid step for the grid oracle; 1% of the largest demand by default.
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimality of an allocation against a reference allocation.
    Metrics {
        #[arg(long)]
        alloc: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Floor on reference sums; 1e-6 × largest reference sum by default.
        #[arg(long)]
        theta: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    Waterfill,
    MaxminSinglepath,
    Grid,
}

/// Failure classes that map to exit codes.
enum Failure {
    Input(anyhow::Error),
    Other(anyhow::Error),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.into())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Model(TeError::Diverged { .. }) | ExperimentError::Model(TeError::RootSolver { .. }) => {
                Failure::Other(e.into())
            }
            _ => Failure::Input(e.into()),
        }
    }
}

impl From<TeError> for Failure {
    fn from(e: TeError) -> Self {
        match e {
            TeError::Diverged { .. } | TeError::RootSolver { .. } => Failure::Other(e.into()),
            _ => Failure::Input(e.into()),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => io::write_file(p, text).map_err(Failure::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_topology(path: &Path) -> Result<Topology, InputError> {
    io::parse_topology(&path.display().to_string(), &io::read_file(path)?)
}

fn load_demands(path: &Path, topology: &Topology) -> Result<Vec<Commodity>, InputError> {
    io::parse_demands(&path.display().to_string(), &io::read_file(path)?, topology)
}

fn load_instance(args: &InstanceArgs) -> Result<Instance, Failure> {
    let topology = load_topology(&args.topology)?;
    let commodities = load_demands(&args.demands, &topology)?;
    let paths: PathSet = match &args.paths {
        Some(p) => io::parse_paths(&p.display().to_string(), &io::read_file(p)?, &topology, &commodities)?,
        None => {
            if args.k == 0 {
                return Err(Failure::Input(anyhow::anyhow!("--k must be at least 1")));
            }
            k_shortest_paths(&topology, &commodities, args.k)
        }
    };
    Ok(build_instance(topology, commodities, paths)?)
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Solve {
            instance,
            alpha_target,
            gamma,
            beta0,
            max_iterations,
            fixed_beta,
            threads,
            warm_start,
            trace,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let mut cfg = SolverConfig { alpha_target, trace: trace.is_some(), ..Default::default() };
            if let Some(g) = gamma {
                cfg.gamma = g;
            }
            if let Some(b) = beta0 {
                cfg.beta0 = b;
            }
            if let Some(m) = max_iterations {
                cfg.max_iterations = m;
            }
            cfg.adaptive_beta = !fixed_beta;
            if let Some(n) = threads {
                cfg.parallelism = Parallelism::Threads(n);
            }
            let warm = match &warm_start {
                Some(p) => {
                    let name = p.display().to_string();
                    let rows = io::parse_allocation(&name, &io::read_file(p)?)?;
                    Some(io::allocation_rates(&name, &inst, &rows)?)
                }
                None => None,
            };
            let res = solve_with(&inst, &cfg, warm.as_deref(), &SolveOptions::default())?;
            if let Some(p) = &trace {
                io::write_file(p, &trace_csv(&res.trace))?;
            }
            let footer = AllocationFooter { objective: res.objective, iterations: res.iterations, runtime_s: res.runtime_s };
            emit(out.as_deref(), &io::allocation_csv(&inst, &res.rates, &footer))?;
            eprintln!(
                "{} after {} iterations at alpha {} ({:?}), objective {}, {:.3} s",
                if res.converged { "converged" } else { "not converged" },
                res.iterations,
                res.alpha,
                res.stop,
                res.objective,
                res.runtime_s
            );
            Ok(if res.converged { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::GenTopology { nodes, seed, out } => {
            let topo = RandomTopology { nodes, seed, ..Default::default() }.generate()?;
            emit(out.as_deref(), &io::topology_csv(&topo))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenDemands { topology, total_volume, out } => {
            let topo = load_topology(&topology)?;
            if !(total_volume.is_finite() && total_volume > 0.0) {
                return Err(Failure::Input(anyhow::anyhow!("--total-volume must be positive")));
            }
            let cs = gravity_demands(&topo, total_volume)?;
            emit(out.as_deref(), &io::demands_csv(&topo, &cs))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenPaths { topology, demands, k, out } => {
            let topo = load_topology(&topology)?;
            let cs = load_demands(&demands, &topo)?;
            if k == 0 {
                return Err(Failure::Input(anyhow::anyhow!("--k must be at least 1")));
            }
            let ps = k_shortest_paths(&topo, &cs, k);
            emit(out.as_deref(), &format!("{}\n", io::paths_json(&topo, &cs, &ps)))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, out_dir } => {
            let report = run_experiment(&config, &out_dir)?;
            for (i, reason) in &report.skipped {
                eprintln!("snapshot {i} skipped: {reason}");
            }
            eprintln!("{} rows written to {}", report.rows.len(), out_dir.join("results.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { instance, method, alpha, grid_step, out } => {
            let inst = load_instance(&instance)?;
            let alloc = match method {
                OracleMethod::Waterfill => waterfill_baseline(&inst),
                OracleMethod::MaxminSinglepath => exact_maxmin_singlepath(&inst)?,
                OracleMethod::Grid => {
                    let step = grid_step.unwrap_or_else(|| 0.01 * inst.demands().iter().cloned().fold(0.0, f64::max));
                    if !(step.is_finite() && step > 0.0) {
                        return Err(Failure::Input(anyhow::anyhow!("grid step must be positive")));
                    }
                    let objective = match alpha {
                        AlphaTarget::Finite(a) => GridObjective::Alpha(a as f64),
                        AlphaTarget::MaxMin => GridObjective::MaxMin,
                    };
                    exact_bruteforce_tiny(&inst, objective, step)?
                }
            };
            let alpha_value = match alpha {
                AlphaTarget::Finite(a) => a as f64,
                AlphaTarget::MaxMin => 0.0,
            };
            let footer = AllocationFooter {
                objective: te_core::kernels::objective(&alloc.sums, alpha_value, 1e-12),
                iterations: 0,
                runtime_s: 0.0,
            };
            emit(out.as_deref(), &io::allocation_csv(&inst, &alloc.rates, &footer))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { alloc, reference, theta } => {
            let a_name = alloc.display().to_string();
            let r_name = reference.display().to_string();
            let a = io::allocation_sums(&io::parse_allocation(&a_name, &io::read_file(&alloc)?)?);
            let r = io::allocation_sums(&io::parse_allocation(&r_name, &io::read_file(&reference)?)?);
            let mut got = Vec::with_capacity(r.len());
            for (name, _) in &r {
                let v = a.iter().find(|(n, _)| n == name).map(|(_, v)| *v).ok_or_else(|| {
                    Failure::Input(anyhow::anyhow!("{a_name} has no rows for commodity {name}"))
                })?;
                got.push(v);
            }
            if a.len() != r.len() {
                return Err(Failure::Input(anyhow::anyhow!("{a_name} and {r_name} cover different commodities")));
            }
            let want: Vec<f64> = r.iter().map(|(_, v)| *v).collect();
            let theta = theta.unwrap_or_else(|| 1e-6 * want.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE));
            if !(theta.is_finite() && theta > 0.0) {
                return Err(Failure::Input(anyhow::anyhow!("--theta must be positive")));
            }
            println!("optimality,{}", optimality_of_sums(&got, &want, theta));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
