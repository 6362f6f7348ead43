use std::time::Instant;

use super::{tolerance, SolveError, Solution};
use crate::power::Target;
use crate::problem::{check_feasible, feasible_targets, objective, Assignment};
use crate::scenario::Instance;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Enumerates every total assignment over the static feasible targets and
/// keeps the cheapest feasible one. Among equal objectives the
/// lexicographically smallest target vector wins (vehicles by id, cloud last).
pub fn solve_brute(instance: &Instance, node_budget: u64) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let options: Vec<Vec<Target>> = instance
        .requests()
        .iter()
        .map(|r| feasible_targets(r, instance))
        .collect();
    let size = options
        .iter()
        .try_fold(1u64, |acc, o| acc.checked_mul(o.len() as u64));
    match size {
        Some(size) if size <= node_budget => {}
        Some(size) => {
            return Err(SolveError::TooLarge {
                size: size.to_string(),
                budget: node_budget,
            })
        }
        None => {
            return Err(SolveError::TooLarge {
                size: format!("more than {}", u64::MAX),
                budget: node_budget,
            })
        }
    }

    let n = options.len();
    let mut digits = vec![0usize; n];
    let mut best: Option<(f64, Assignment)> = None;
    let mut nodes = 0u64;
    loop {
        nodes += 1;
        let candidate = Assignment::new(digits.iter().zip(&options).map(|(&d, o)| o[d]).collect());
        if check_feasible(&candidate, instance).is_empty() {
            let value = objective(&candidate, instance);
            let better = match &best {
                None => true,
                Some((incumbent, _)) => value < incumbent - tolerance(*incumbent),
            };
            if better {
                best = Some((value, candidate));
            }
        }
        // Odometer with request 0 as the most significant digit.
        let mut i = n;
        loop {
            if i == 0 {
                return finish(best, nodes, start);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

fn finish(
    best: Option<(f64, Assignment)>,
    nodes: u64,
    start: Instant,
) -> Result<Solution, SolveError> {
    let (objective, assignment) =
        best.ok_or_else(|| SolveError::Infeasible("no assignment satisfies every constraint".into()))?;
    Ok(Solution {
        assignment,
        objective,
        optimal: true,
        nodes_explored: nodes,
        runtime: start.elapsed(),
    })
}
