use std::time::Instant;

use super::bound::PartialAssignment;
use super::{SolveError, Solution};
use crate::problem::{objective, Problem};
use crate::scenario::Instance;

/// Places requests in descending demand order, each on its cheapest target
/// that still has room.
pub fn solve_greedy(instance: &Instance) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let problem = Problem::new(instance);
    if let Some(reason) = problem.structural_infeasibility() {
        return Err(SolveError::Infeasible(reason));
    }
    let partial = greedy_partial(&problem)?;
    let assignment = partial.to_assignment().expect("greedy decides every request");
    Ok(Solution {
        objective: objective(&assignment, instance),
        assignment,
        optimal: false,
        nodes_explored: problem.request_count() as u64,
        runtime: start.elapsed(),
    })
}

pub(crate) fn greedy_partial<'a>(problem: &Problem<'a>) -> Result<PartialAssignment, SolveError> {
    let mut partial = PartialAssignment::new(problem);
    for u in problem.demand_order() {
        let target = problem
            .ranked_targets(u)
            .into_iter()
            .find(|&t| partial.fits(problem, u, t))
            .ok_or(SolveError::GreedyStuck(u))?;
        partial.push(problem, u, target);
    }
    Ok(partial)
}
