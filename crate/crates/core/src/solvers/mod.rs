//! Interchangeable solvers for the assignment problem: an exhaustive oracle,
//! depth-first branch-and-bound, and a greedy heuristic.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::problem::Assignment;
use crate::scenario::Instance;

mod assign;
mod blocks;
mod bound;
mod brute;
mod exact;
mod greedy;

pub use bound::{lower_bound, PartialAssignment};
pub use brute::{solve_brute, DEFAULT_NODE_BUDGET};
pub use exact::solve_exact;
pub use greedy::solve_greedy;

/// Relative tolerance for objective comparisons.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-9;

pub(crate) fn tolerance(reference: f64) -> f64 {
    OBJECTIVE_TOLERANCE * reference.abs().max(1.0)
}

/// Whether a completion costing at least `bound` could still beat
/// `incumbent`. When every objective is a common base minus a whole number of
/// `saving_unit`s, anything short of one unit below the incumbent is no
/// improvement.
pub(crate) fn can_improve(bound: f64, incumbent: f64, saving_unit: Option<f64>) -> bool {
    if !incumbent.is_finite() {
        return bound.is_finite();
    }
    match saving_unit {
        Some(unit) => bound <= incumbent - unit + 1e-3 * unit,
        None => bound < incumbent - tolerance(incumbent),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub assignment: Assignment,
    /// Total power in W, evaluated on `assignment`.
    pub objective: f64,
    /// True when the solver proved optimality.
    pub optimal: bool,
    pub nodes_explored: u64,
    pub runtime: Duration,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("search space of {size} assignments exceeds the node budget of {budget}")]
    TooLarge { size: String, budget: u64 },
    #[error("time budget exhausted before any feasible assignment was found")]
    BudgetExhausted,
    #[error("greedy placement found no target for request {0}")]
    GreedyStuck(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum SolverKind {
    Exact,
    Greedy,
    Brute,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Exact => "exact",
            SolverKind::Greedy => "greedy",
            SolverKind::Brute => "brute",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SolverKind::Exact),
            "greedy" => Ok(SolverKind::Greedy),
            "brute" => Ok(SolverKind::Brute),
            other => Err(format!(
                "unknown solver `{other}` (expected exact, greedy or brute)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub time_budget: Duration,
    pub node_budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_budget: Duration::from_secs(60),
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

pub fn solve(
    kind: SolverKind,
    instance: &Instance,
    options: &SolveOptions,
) -> Result<Solution, SolveError> {
    match kind {
        SolverKind::Exact => solve_exact(instance, options.time_budget),
        SolverKind::Greedy => solve_greedy(instance),
        SolverKind::Brute => solve_brute(instance, options.node_budget),
    }
}
