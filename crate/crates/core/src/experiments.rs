//! Packages-per-vehicle sweeps: one solve per `(k, seed)` cell, savings
//! against each seed's own cloud-only baseline, and CSV tables.

use std::io::Write;
use std::time::Instant;

use thiserror::Error;

use crate::problem::{check_feasible, metrics, Assignment, Metrics};
use crate::scenario::{build_instance, ConfigError, Instance, ScenarioConfig};
use crate::solvers::{solve, SolveError, SolveOptions, SolverKind};

pub const SWEEP_HEADER: [&str; 12] = [
    "k",
    "seed",
    "total_power_w",
    "network_power_w",
    "processing_power_w",
    "cloud_workload_mhz",
    "fog_workload_mhz",
    "saving_vs_cloud_only_pct",
    "cloud_workload_reduction_pct",
    "solver",
    "optimal",
    "runtime_ms",
];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("k_values is empty")]
    NoPackageCounts,
    #[error("seeds is empty")]
    NoSeeds,
    #[error("jobs must be at least 1")]
    NoWorkers,
    #[error("nothing to summarize")]
    NoRows,
    #[error("cell k={k}, seed={seed}: {source}")]
    Config {
        k: u32,
        seed: u64,
        #[source]
        source: ConfigError,
    },
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub k_values: Vec<u32>,
    pub seeds: Vec<u64>,
    pub solver: SolverKind,
    pub options: SolveOptions,
    /// Worker threads; cells are independent.
    pub jobs: usize,
    /// Wall-clock time varies between runs, so it is left out of the table
    /// unless asked for.
    pub record_runtime: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: ScenarioConfig::default(),
            k_values: (0..=10).collect(),
            seeds: (0..10).collect(),
            solver: SolverKind::Exact,
            options: SolveOptions::default(),
            jobs: 1,
            record_runtime: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.k_values.is_empty() {
            return Err(SweepError::NoPackageCounts);
        }
        if self.seeds.is_empty() {
            return Err(SweepError::NoSeeds);
        }
        if self.jobs == 0 {
            return Err(SweepError::NoWorkers);
        }
        for (k, seed) in self.cells() {
            self.cell_config(k, seed)
                .validate()
                .map_err(|source| SweepError::Config { k, seed, source })?;
        }
        Ok(())
    }

    /// Scenario of one cell: the base with its seed and package count.
    pub fn cell_config(&self, k: u32, seed: u64) -> ScenarioConfig {
        let mut config = self.base.clone();
        config.scenario.seed = seed;
        config.scenario.packages_per_vehicle = k;
        config
    }

    fn cells(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.k_values
            .iter()
            .flat_map(|&k| self.seeds.iter().map(move |&seed| (k, seed)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub metrics: Metrics,
    pub saving_vs_cloud_only_pct: f64,
    pub cloud_workload_reduction_pct: f64,
    pub optimal: bool,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: u32,
    pub seed: u64,
    pub solver: SolverKind,
    pub result: Result<CellResult, SolveError>,
}

impl SweepRow {
    pub fn total_power_w(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.metrics.total_power_w)
    }
}

/// Metrics of the forced all-cloud assignment.
pub fn baseline_cloud_only(instance: &Instance) -> Result<Metrics, SolveError> {
    let assignment = Assignment::all_cloud(instance);
    let violations = check_feasible(&assignment, instance);
    if let Some(v) = violations.first() {
        return Err(SolveError::Infeasible(format!("all-cloud assignment: {v}")));
    }
    Ok(metrics(&assignment, instance))
}

fn percent_below(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        100.0 * (1.0 - value / reference)
    }
}

fn run_cell(config: &SweepConfig, k: u32, seed: u64) -> SweepRow {
    let instance = build_instance(&config.cell_config(k, seed))
        .expect("cell configurations are validated before the sweep");
    let start = Instant::now();
    let result = baseline_cloud_only(&instance).and_then(|baseline| {
        let solution = solve(config.solver, &instance, &config.options)?;
        let m = metrics(&solution.assignment, &instance);
        Ok(CellResult {
            saving_vs_cloud_only_pct: percent_below(m.total_power_w, baseline.total_power_w),
            cloud_workload_reduction_pct: percent_below(
                m.cloud_workload_mhz as f64,
                baseline.cloud_workload_mhz as f64,
            ),
            metrics: m,
            optimal: solution.optimal,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    });
    SweepRow {
        k,
        seed,
        solver: config.solver,
        result,
    }
}

/// One row per `(k, seed)`, ordered by `k` then seed whatever the number of
/// workers. Solver failures are recorded in the row, not returned.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    use rayon::prelude::*;

    config.validate()?;
    let cells: Vec<(u32, u64)> = config.cells().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(k, seed)| run_cell(config, k, seed))
            .collect()
    }))
}

/// Aggregate of one numeric column set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowValues {
    pub total_power_w: f64,
    pub network_power_w: f64,
    pub processing_power_w: f64,
    pub cloud_workload_mhz: f64,
    pub fog_workload_mhz: f64,
    pub saving_vs_cloud_only_pct: f64,
    pub cloud_workload_reduction_pct: f64,
    pub runtime_ms: f64,
}

impl RowValues {
    fn of(r: &CellResult) -> Self {
        Self {
            total_power_w: r.metrics.total_power_w,
            network_power_w: r.metrics.network_power_w,
            processing_power_w: r.metrics.processing_power_w,
            cloud_workload_mhz: r.metrics.cloud_workload_mhz as f64,
            fog_workload_mhz: r.metrics.fog_workload_mhz as f64,
            saving_vs_cloud_only_pct: r.saving_vs_cloud_only_pct,
            cloud_workload_reduction_pct: r.cloud_workload_reduction_pct,
            runtime_ms: r.runtime_ms,
        }
    }

    fn fields(&self) -> [f64; 8] {
        [
            self.total_power_w,
            self.network_power_w,
            self.processing_power_w,
            self.cloud_workload_mhz,
            self.fog_workload_mhz,
            self.saving_vs_cloud_only_pct,
            self.cloud_workload_reduction_pct,
            self.runtime_ms,
        ]
    }

    fn from_fields(f: [f64; 8]) -> Self {
        Self {
            total_power_w: f[0],
            network_power_w: f[1],
            processing_power_w: f[2],
            cloud_workload_mhz: f[3],
            fog_workload_mhz: f[4],
            saving_vs_cloud_only_pct: f[5],
            cloud_workload_reduction_pct: f[6],
            runtime_ms: f[7],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSummary {
    pub k: u32,
    /// Successful cells aggregated; failed cells are skipped.
    pub count: usize,
    pub mean: RowValues,
    pub min: RowValues,
    pub max: RowValues,
}

/// Mean, min and max per `k` over the successful rows, in ascending `k`.
/// A `k` whose cells all failed is omitted.
pub fn summarize(rows: &[SweepRow]) -> Result<Vec<KSummary>, SweepError> {
    if rows.is_empty() {
        return Err(SweepError::NoRows);
    }
    let mut ks: Vec<u32> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut out = Vec::new();
    for k in ks {
        let values: Vec<[f64; 8]> = rows
            .iter()
            .filter(|r| r.k == k)
            .filter_map(|r| r.result.as_ref().ok())
            .map(|r| RowValues::of(r).fields())
            .collect();
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let fold = |init: f64, f: fn(f64, f64) -> f64| {
            let mut acc = [init; 8];
            for v in &values {
                for (a, x) in acc.iter_mut().zip(v) {
                    *a = f(*a, *x);
                }
            }
            acc
        };
        let mut mean = fold(0.0, |a, x| a + x);
        for m in &mut mean {
            *m /= n;
        }
        out.push(KSummary {
            k,
            count: values.len(),
            mean: RowValues::from_fields(mean),
            min: RowValues::from_fields(fold(f64::INFINITY, f64::min)),
            max: RowValues::from_fields(fold(f64::NEG_INFINITY, f64::max)),
        });
    }
    Ok(out)
}

/// Formats like C's `%g`: six significant digits, trailing zeros dropped,
/// exponent form outside `1e-4 ..< 1e6`.
pub fn format_g(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the per-cell table. Failed cells keep their `k`, seed and solver
/// with empty metric fields.
pub fn write_rows<W: Write>(out: W, rows: &[SweepRow], record_runtime: bool) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        let mut record = vec![row.k.to_string(), row.seed.to_string()];
        match &row.result {
            Ok(r) => {
                let m = &r.metrics;
                record.extend([
                    format_g(m.total_power_w),
                    format_g(m.network_power_w),
                    format_g(m.processing_power_w),
                    m.cloud_workload_mhz.to_string(),
                    m.fog_workload_mhz.to_string(),
                    format_g(r.saving_vs_cloud_only_pct),
                    format_g(r.cloud_workload_reduction_pct),
                    row.solver.to_string(),
                    r.optimal.to_string(),
                    if record_runtime {
                        format_g(r.runtime_ms)
                    } else {
                        String::new()
                    },
                ]);
            }
            Err(_) => {
                record.extend(std::iter::repeat(String::new()).take(7));
                record.extend([row.solver.to_string(), "false".into(), String::new()]);
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `k,stat,...` with `stat` one of `mean`, `min`, `max`.
pub fn write_summary<W: Write>(
    out: W,
    summary: &[KSummary],
    record_runtime: bool,
) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k",
        "stat",
        "count",
        "total_power_w",
        "network_power_w",
        "processing_power_w",
        "cloud_workload_mhz",
        "fog_workload_mhz",
        "saving_vs_cloud_only_pct",
        "cloud_workload_reduction_pct",
        "runtime_ms",
    ])?;
    for s in summary {
        for (stat, values) in [("mean", &s.mean), ("min", &s.min), ("max", &s.max)] {
            let mut record = vec![s.k.to_string(), stat.to_string(), s.count.to_string()];
            let fields = values.fields();
            record.extend(fields[..7].iter().map(|&x| format_g(x)));
            record.push(if record_runtime {
                format_g(fields[7])
            } else {
                String::new()
            });
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}
