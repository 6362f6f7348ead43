//! The `vfog` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 infeasible instance (or,
//! for `evaluate`, an assignment that violates a constraint), 3 time budget
//! exhausted without a proven optimum.
//!
//! Scenario values resolve as flags, then `--config`, then built-in defaults.

use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::experiments::{run_sweep, summarize, write_rows, write_summary, SweepConfig};
use crate::problem::{check_feasible, metrics, Assignment, Metrics};
use crate::scenario::{build_instance, Instance, ScenarioConfig};
use crate::solvers::{solve, SolveError, SolveOptions, SolverKind, DEFAULT_NODE_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vfog", version, about = "Energy-aware request placement on a vehicular fog")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance and write it as TOML.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and report its metrics.
    Solve {
        #[command(flatten)]
        source: InstanceSource,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the assignment (`request_id,target` lines) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check and score an assignment against an instance.
    Evaluate {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long)]
        assignment: PathBuf,
    },
    /// Solve every (k, seed) cell and write the per-cell table.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Packages per vehicle, `a..b` inclusive or a single value.
        #[arg(long, value_parser = parse_k_range, default_value = "0..10")]
        k: RangeInclusive<u32>,
        /// Number of seeds, counting up from `--seed` (default 0).
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Per-cell CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-k mean/min/max CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Fill the runtime_ms column (makes output vary between runs).
        #[arg(long)]
        record_runtime: bool,
    },
    /// Print the fully resolved configuration.
    ShowConfig {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// TOML configuration document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub packages_per_vehicle: Option<u32>,
    #[arg(long)]
    pub requests: Option<usize>,
    #[arg(long)]
    pub vehicles: Option<usize>,
    /// Data rate per unit of demand, Mbps per MHz.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<ScenarioConfig, String> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path).map_err(|e| e.to_string())?,
            None => ScenarioConfig::default(),
        };
        let p = &mut config.scenario;
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.packages_per_vehicle {
            p.packages_per_vehicle = v;
        }
        if let Some(v) = self.requests {
            p.request_count = v;
        }
        if let Some(v) = self.vehicles {
            p.vehicle_count = v;
        }
        if let Some(v) = self.alpha {
            p.alpha_mbps_per_mhz = v;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

/// Either a saved instance or scenario flags to generate one.
#[derive(Debug, Clone, Args)]
pub struct InstanceSource {
    /// Instance TOML written by `generate`.
    #[arg(long, conflicts_with_all = ["config", "seed", "packages_per_vehicle", "requests", "vehicles", "alpha"])]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

impl InstanceSource {
    pub fn load(&self) -> Result<Instance, String> {
        match &self.instance {
            Some(path) => Instance::load(path).map_err(|e| e.to_string()),
            None => build_instance(&self.scenario.resolve()?).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverKind::Exact)]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 60.0)]
    pub time_budget_s: f64,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub node_budget: u64,
}

impl SolverArgs {
    fn options(&self) -> Result<SolveOptions, String> {
        let time_budget = Duration::try_from_secs_f64(self.time_budget_s)
            .map_err(|_| format!("invalid --time-budget-s {}", self.time_budget_s))?;
        Ok(SolveOptions {
            time_budget,
            node_budget: self.node_budget,
        })
    }
}

fn parse_k_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let bad = || format!("expected `a..b` or a single number, got `{s}`");
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(format!("empty range `{s}`"));
    }
    Ok(a..=b)
}

pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Exit code for a clap error: help and version are not failures.
pub fn parse_error_code(err: &clap::Error) -> i32 {
    if err.use_stderr() {
        EXIT_USAGE
    } else {
        EXIT_OK
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::Infeasible(_) | SolveError::GreedyStuck(_) => EXIT_INFEASIBLE,
            SolveError::BudgetExhausted => EXIT_BUDGET,
            SolveError::TooLarge { .. } => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Runs one command; reports go to `out`, diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, contents: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => write_file(p, contents),
        None => out
            .write_all(contents)
            .map_err(|e| Failure::usage(format!("cannot write output: {e}"))),
    }
}

fn report(out: &mut dyn Write, m: &Metrics) -> Result<(), Failure> {
    writeln!(
        out,
        "total_power_w={}\nnetwork_power_w={}\nprocessing_power_w={}\ncloud_workload_mhz={}\nfog_workload_mhz={}\ncloud_requests={}\nfog_requests={}",
        m.total_power_w,
        m.network_power_w,
        m.processing_power_w,
        m.cloud_workload_mhz,
        m.fog_workload_mhz,
        m.cloud_request_count,
        m.fog_request_count
    )
    .map_err(|e| Failure::usage(format!("cannot write output: {e}")))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Generate { scenario, out: path } => {
            let config = scenario.resolve().map_err(Failure::usage)?;
            let instance = build_instance(&config).map_err(|e| Failure::usage(e.to_string()))?;
            emit(out, path.as_deref(), instance.to_toml().as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Solve {
            source,
            solver,
            out: path,
        } => {
            let instance = source.load().map_err(Failure::usage)?;
            let options = solver.options().map_err(Failure::usage)?;
            let solution = solve(solver.solver, &instance, &options)?;
            if let Some(p) = &path {
                write_file(p, solution.assignment.to_csv().as_bytes())?;
            }
            report(out, &metrics(&solution.assignment, &instance))?;
            let _ = writeln!(
                out,
                "solver={}\noptimal={}\nnodes_explored={}",
                solver.solver, solution.optimal, solution.nodes_explored
            );
            if solver.solver == SolverKind::Exact && !solution.optimal {
                let _ = writeln!(err, "time budget exhausted; best assignment found is not proven optimal");
                return Ok(EXIT_BUDGET);
            }
            Ok(EXIT_OK)
        }
        Command::Evaluate { source, assignment } => {
            let instance = source.load().map_err(Failure::usage)?;
            let text = fs::read_to_string(&assignment)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", assignment.display())))?;
            let assignment = Assignment::from_csv(&text).map_err(|e| Failure::usage(e.to_string()))?;
            assignment
                .validate(&instance)
                .map_err(|e| Failure::usage(e.to_string()))?;
            report(out, &metrics(&assignment, &instance))?;
            let violations = check_feasible(&assignment, &instance);
            let _ = writeln!(out, "violations={}", violations.len());
            for v in &violations {
                let _ = writeln!(err, "violation: {v}");
            }
            Ok(if violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_INFEASIBLE
            })
        }
        Command::Sweep {
            scenario,
            solver,
            k,
            seeds,
            jobs,
            out: path,
            summary,
            record_runtime,
        } => {
            let base = scenario.resolve().map_err(Failure::usage)?;
            let first = base.scenario.seed;
            let last = first
                .checked_add(seeds)
                .ok_or_else(|| Failure::usage("seed range overflows"))?;
            let config = SweepConfig {
                base,
                k_values: k.collect(),
                seeds: (first..last).collect(),
                solver: solver.solver,
                options: solver.options().map_err(Failure::usage)?,
                jobs,
                record_runtime,
            };
            let rows = run_sweep(&config).map_err(|e| Failure::usage(e.to_string()))?;
            let mut table = Vec::new();
            write_rows(&mut table, &rows, record_runtime).map_err(|e| Failure::usage(e.to_string()))?;
            emit(out, path.as_deref(), &table)?;
            if let Some(p) = &summary {
                let mut buf = Vec::new();
                let per_k = summarize(&rows).map_err(|e| Failure::usage(e.to_string()))?;
                write_summary(&mut buf, &per_k, record_runtime).map_err(|e| Failure::usage(e.to_string()))?;
                write_file(p, &buf)?;
            }
            let mut code = EXIT_OK;
            for row in &rows {
                let cell = match &row.result {
                    Ok(r) if solver.solver == SolverKind::Exact && !r.optimal => EXIT_BUDGET,
                    Ok(_) => EXIT_OK,
                    Err(e) => Failure::from(e.clone()).code,
                };
                if cell != EXIT_OK {
                    let _ = writeln!(err, "cell k={} seed={}: exit {cell}", row.k, row.seed);
                }
                code = code.max(cell);
            }
            Ok(code)
        }
        Command::ShowConfig { scenario } => {
            let config = scenario.resolve().map_err(Failure::usage)?;
            emit(out, None, config.to_toml().as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_command_parses() {
        let cli = parse_args(["vfog", "solve", "--instance", "f", "--solver", "exact"]).unwrap();
        match cli.command {
            Command::Solve { source, solver, .. } => {
                assert_eq!(source.instance, Some(PathBuf::from("f")));
                assert_eq!(solver.solver, SolverKind::Exact);
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn sweep_range_parses() {
        let cli = parse_args(["vfog", "sweep", "--k", "0..10", "--seeds", "10", "--out", "r.csv"]).unwrap();
        match cli.command {
            Command::Sweep { k, seeds, out, .. } => {
                assert_eq!(k, 0..=10);
                assert_eq!(seeds, 10);
                assert_eq!(out, Some(PathBuf::from("r.csv")));
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn unknown_solver_lists_choices() {
        let e = parse_args(["vfog", "solve", "--solver", "frobnicate"]).unwrap_err();
        let text = e.to_string();
        for name in ["exact", "greedy", "brute"] {
            assert!(text.contains(name), "{text}");
        }
        assert_eq!(parse_error_code(&e), EXIT_USAGE);
    }

    #[test]
    fn help_is_not_an_error() {
        let e = parse_args(["vfog", "--help"]).unwrap_err();
        assert_eq!(parse_error_code(&e), EXIT_OK);
    }

    #[test]
    fn unknown_flags_and_missing_commands_are_rejected() {
        assert!(parse_args(["vfog", "solve", "--frob"]).is_err());
        assert!(parse_args(["vfog"]).is_err());
    }

    #[test]
    fn k_range_forms() {
        assert_eq!(parse_k_range("3").unwrap(), 3..=3);
        assert_eq!(parse_k_range("2..=5").unwrap(), 2..=5);
        assert!(parse_k_range("5..2").is_err());
        assert!(parse_k_range("a..b").is_err());
    }

    #[test]
    fn instance_file_excludes_scenario_flags() {
        assert!(parse_args(["vfog", "solve", "--instance", "f", "--seed", "3"]).is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let args = ScenarioArgs {
            seed: Some(5),
            requests: Some(7),
            ..Default::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.scenario.seed, 5);
        assert_eq!(c.scenario.request_count, 7);
        assert_eq!(c.scenario.vehicle_count, 20);
    }
}
