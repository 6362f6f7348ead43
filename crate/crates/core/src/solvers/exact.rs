use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::assign::min_cost_assignment;
use super::blocks::{is_solo, side_constraints_slack, BlockSearch};
use super::bound::{lower_bound, KnapsackView, LagrangianBound, PartialAssignment};
use super::greedy::greedy_partial;
use super::{can_improve, tolerance, SolveError, Solution};
use crate::power::Target;
use crate::problem::{objective, Assignment, Problem};
use crate::scenario::Instance;

const ROOT_ITERATIONS: usize = 400;
const NODE_ITERATIONS: usize = 12;
const CLOCK_CHECK_INTERVAL: u64 = 64;
const MEMO_LIMIT: usize = 2_000_000;

/// Exact minimum-power assignment by branch-and-bound, seeded with the greedy
/// solution. `optimal` is false when the time budget ran out first; the best
/// assignment found so far is returned then.
///
/// A solo request is one that no vehicle can host together with any other
/// request. When cloud capacity and link groups cannot bind, the search runs
/// over groupings of the shareable requests (see [`BlockSearch`]). Otherwise
/// it branches request by request.
pub fn solve_exact(instance: &Instance, time_budget: Duration) -> Result<Solution, SolveError> {
    solve_exact_with(instance, time_budget, Method::Auto)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Method {
    Auto,
    /// Always branch request by request.
    #[cfg_attr(not(test), allow(dead_code))]
    ItemWise,
}

pub(crate) fn solve_exact_with(
    instance: &Instance,
    time_budget: Duration,
    method: Method,
) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let problem = Problem::new(instance);
    if let Some(reason) = problem.structural_infeasibility() {
        return Err(SolveError::Infeasible(reason));
    }
    let deadline = start.checked_add(time_budget);
    let seed = greedy_partial(&problem).ok();
    let (incumbent, best) = match &seed {
        Some(partial) => (partial.cost(), partial.to_assignment()),
        None => (f64::INFINITY, None),
    };
    let solo: Vec<bool> = (0..problem.request_count())
        .map(|u| is_solo(&problem, u))
        .collect();
    let (best, timed_out, nodes) = if method == Method::Auto && side_constraints_slack(&problem) {
        let mut search = BlockSearch::new(&problem, &solo, deadline);
        search.incumbent = incumbent;
        search.best = best;
        search.run();
        (search.best, search.timed_out, search.nodes)
    } else {
        let mut search = Search::new(&problem, &solo, deadline);
        search.incumbent = incumbent;
        search.best = best;
        let mut lambda = vec![0.0; problem.request_count()];
        search.dfs(0, &mut lambda);
        (search.best, search.timed_out, search.nodes)
    };

    let optimal = !timed_out;
    let nodes_explored = nodes;
    match best {
        Some(assignment) => Ok(Solution {
            objective: objective(&assignment, instance),
            assignment,
            optimal,
            nodes_explored,
            runtime: start.elapsed(),
        }),
        None if optimal => Err(SolveError::Infeasible(
            "no assignment satisfies every constraint".into(),
        )),
        None => Err(SolveError::BudgetExhausted),
    }
}

/// Request-by-request search.
///
/// Shareable requests are branched first, each band in descending demand
/// (ties by id); children are tried in ascending per-request cost, vehicles
/// by id and the cloud last. Nodes are pruned by the cheap bound, then by a
/// state already reached at no greater cost, then by the Lagrangian bound.
/// Residuals are compared after snapping each one down to the largest load
/// the undecided requests could still bring, so states admitting the same
/// completions are recognized as equal. Vehicles with equal costs on the
/// undecided requests and equal snapped residual are interchangeable; only
/// the first is branched on. When only solo requests are left the rest is an
/// assignment problem.
struct Search<'p, 'a> {
    problem: &'p Problem<'a>,
    order: Vec<usize>,
    /// Requests from this depth on are solo.
    solo_start: usize,
    ranked: Vec<Vec<Target>>,
    /// `group_of[depth][v]`: vehicles in one group have equal costs on every
    /// request from `depth` on.
    group_of: Vec<Vec<usize>>,
    /// `members[depth][g]`, ascending.
    members: Vec<Vec<Vec<usize>>>,
    /// `reach[depth][g]`: bitset of the loads the group's compatible requests
    /// from `depth` on can form.
    reach: Vec<Vec<Vec<u64>>>,
    remaining_demand: Vec<u64>,
    remaining_rate: Vec<u64>,
    saving_unit: Option<f64>,
    partial: PartialAssignment,
    lagrangian: LagrangianBound,
    memo: HashMap<Vec<u32>, f64>,
    /// Residual per vehicle, snapped at the current depth; one row per depth
    /// so that children do not clobber their parent's values.
    snapped: Vec<Vec<u32>>,
    incumbent: f64,
    best: Option<Assignment>,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<'p, 'a> Search<'p, 'a> {
    fn new(problem: &'p Problem<'a>, solo: &[bool], deadline: Option<Instant>) -> Self {
        let m = problem.vehicle_count();
        let (mut order, solo_band): (Vec<usize>, Vec<usize>) =
            problem.demand_order().into_iter().partition(|&u| !solo[u]);
        let solo_start = order.len();
        order.extend(solo_band);
        let n = order.len();
        let mut group_of = Vec::with_capacity(n + 1);
        let mut members = Vec::with_capacity(n + 1);
        let mut reach = Vec::with_capacity(n + 1);
        for depth in 0..=n {
            let mut signatures: HashMap<Vec<u64>, usize> = HashMap::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let row: Vec<usize> = (0..m)
                .map(|v| {
                    let signature: Vec<u64> = order[depth..]
                        .iter()
                        .map(|&u| problem.vehicle_cost[u][v].map_or(u64::MAX, f64::to_bits))
                        .collect();
                    let g = *signatures.entry(signature).or_insert_with(|| {
                        groups.push(Vec::new());
                        groups.len() - 1
                    });
                    groups[g].push(v);
                    g
                })
                .collect();
            let sums = groups
                .iter()
                .map(|group| {
                    let cap = group
                        .iter()
                        .map(|&v| problem.vehicle_capacity[v])
                        .max()
                        .unwrap_or(0) as usize;
                    let rep = group[0];
                    let mut bits = vec![0u64; cap / 64 + 1];
                    bits[0] = 1;
                    for &u in &order[depth..] {
                        let d = problem.demand[u] as usize;
                        if problem.vehicle_cost[u][rep].is_some() && d <= cap {
                            shift_or(&mut bits, d, cap);
                        }
                    }
                    bits
                })
                .collect();
            group_of.push(row);
            members.push(groups);
            reach.push(sums);
        }
        let suffix = |f: &dyn Fn(usize) -> u64| {
            let mut acc = vec![0u64; n + 1];
            for i in (0..n).rev() {
                acc[i] = acc[i + 1] + f(order[i]);
            }
            acc
        };
        let remaining_demand = suffix(&|u| u64::from(problem.demand[u]));
        let remaining_rate = suffix(&|u| problem.rate[u]);
        Self {
            problem,
            ranked: (0..problem.request_count())
                .map(|u| problem.ranked_targets(u))
                .collect(),
            group_of,
            members,
            reach,
            remaining_demand,
            remaining_rate,
            saving_unit: problem.saving_unit(),
            lagrangian: LagrangianBound::new(problem),
            partial: PartialAssignment::new(problem),
            memo: HashMap::new(),
            snapped: vec![vec![0; m]; n + 1],
            order,
            solo_start,
            incumbent: f64::INFINITY,
            best: None,
            nodes: 0,
            deadline,
            timed_out: false,
        }
    }

    /// Whether a completion costing at least `bound` could still beat the
    /// incumbent.
    fn can_improve(&self, bound: f64) -> bool {
        can_improve(bound, self.incumbent, self.saving_unit)
    }

    fn out_of_time(&mut self) -> bool {
        if !self.timed_out && (self.nodes - 1) % CLOCK_CHECK_INTERVAL == 0 {
            if let Some(deadline) = self.deadline {
                self.timed_out = Instant::now() >= deadline;
            }
        }
        self.timed_out
    }

    /// Once only solo requests remain, each vehicle takes at most one more of
    /// them. If neither the cloud nor any link group can run out either, the
    /// best completion is a minimum-cost assignment of the remaining requests
    /// to vehicles and cloud slots. Returns false when that does not apply.
    fn complete_by_assignment(&mut self, depth: usize) -> bool {
        let problem = self.problem;
        let partial = &self.partial;
        if partial.cloud_residual() < self.remaining_demand[depth]
            || partial
                .group_residuals()
                .iter()
                .any(|&g| g < self.remaining_rate[depth])
        {
            return false;
        }
        let rest = &self.order[depth..];
        let m = problem.vehicle_count();
        let cost: Vec<Vec<f64>> = rest
            .iter()
            .map(|&u| {
                let fog = (0..m).map(|v| {
                    if partial.fits(problem, u, Target::Vehicle(v)) {
                        problem.vehicle_cost[u][v].unwrap_or(f64::INFINITY)
                    } else {
                        f64::INFINITY
                    }
                });
                fog.chain(std::iter::repeat(problem.cloud_cost[u]).take(rest.len()))
                    .collect()
            })
            .collect();
        let Some((extra, columns)) = min_cost_assignment(&cost) else {
            return true;
        };
        let total = partial.cost() + extra;
        if self.best.is_none() || total < self.incumbent - tolerance(self.incumbent) {
            let mut targets: Vec<Option<Target>> =
                (0..problem.request_count()).map(|u| partial.target(u)).collect();
            for (&u, &column) in rest.iter().zip(&columns) {
                targets[u] = Some(if column < m {
                    Target::Vehicle(column)
                } else {
                    Target::Cloud
                });
            }
            self.incumbent = total;
            self.best = targets.into_iter().collect::<Option<Vec<_>>>().map(Assignment::new);
        }
        true
    }

    /// Snaps every vehicle residual down to the largest load the undecided
    /// requests could still bring it.
    fn snap_residuals(&mut self, depth: usize) {
        let residual = self.partial.vehicle_residual();
        for (v, slot) in self.snapped[depth].iter_mut().enumerate() {
            let g = self.group_of[depth][v];
            *slot = highest_at_most(&self.reach[depth][g], residual[v]);
        }
    }

    fn state_key(&self, depth: usize) -> Vec<u32> {
        let snapped = &self.snapped[depth];
        let mut key = Vec::with_capacity(snapped.len() + 2 * self.problem.groups.len() + 3);
        key.push(depth as u32);
        for group in &self.members[depth] {
            let start = key.len();
            key.extend(group.iter().map(|&v| snapped[v]));
            key[start..].sort_unstable();
        }
        let mut push_wide = |x: u64| {
            key.push(x as u32);
            key.push((x >> 32) as u32);
        };
        push_wide(self.partial.cloud_residual().min(self.remaining_demand[depth]));
        for &g in self.partial.group_residuals() {
            push_wide(g.min(self.remaining_rate[depth]));
        }
        key
    }

    /// Records the state; false when it was already reached at no greater
    /// cost.
    fn first_visit(&mut self, depth: usize) -> bool {
        let key = self.state_key(depth);
        let cost = self.partial.cost();
        match self.memo.get_mut(&key) {
            Some(seen) if cost >= *seen - tolerance(*seen) => false,
            Some(seen) => {
                *seen = cost;
                true
            }
            None => {
                if self.memo.len() < MEMO_LIMIT {
                    self.memo.insert(key, cost);
                }
                true
            }
        }
    }

    fn dfs(&mut self, depth: usize, lambda: &mut [f64]) {
        self.nodes += 1;
        if self.out_of_time() {
            return;
        }
        let problem = self.problem;
        if depth == self.order.len() {
            let cost = self.partial.cost();
            if self.best.is_none() || cost < self.incumbent - tolerance(self.incumbent) {
                self.incumbent = cost;
                self.best = self.partial.to_assignment();
            }
            return;
        }
        if !self.can_improve(lower_bound(&self.partial, problem)) {
            return;
        }
        self.snap_residuals(depth);
        if !self.first_visit(depth) {
            return;
        }
        if depth == self.solo_start && self.complete_by_assignment(depth) {
            return;
        }
        if self.incumbent.is_finite() {
            let iterations = if depth == 0 { ROOT_ITERATIONS } else { NODE_ITERATIONS };
            let (shareable, solo) = self.order[depth..]
                .split_at(self.solo_start.saturating_sub(depth));
            let view = KnapsackView {
                shareable,
                solo,
                class_of: &self.group_of[depth],
                residual: &self.snapped[depth],
            };
            let bound = self.lagrangian.improve(
                problem,
                &self.partial,
                &view,
                lambda,
                self.incumbent - tolerance(self.incumbent),
                iterations,
            );
            if !self.can_improve(bound) {
                return;
            }
        }

        let u = self.order[depth];
        let mut tried: Vec<(usize, u32)> = Vec::new();
        for i in 0..self.ranked[u].len() {
            let target = self.ranked[u][i];
            if !self.partial.fits(problem, u, target) {
                continue;
            }
            if let Target::Vehicle(v) = target {
                let key = (self.group_of[depth][v], self.snapped[depth][v]);
                if tried.contains(&key) {
                    continue;
                }
                tried.push(key);
            }
            self.partial.push(problem, u, target);
            let mut child_lambda = lambda.to_vec();
            self.dfs(depth + 1, &mut child_lambda);
            self.partial.pop(problem);
            if self.timed_out {
                return;
            }
        }
    }
}

/// `reach |= reach << shift`, keeping bits `0..=cap`.
fn shift_or(reach: &mut [u64], shift: usize, cap: usize) {
    let (word_shift, bit_shift) = (shift / 64, shift % 64);
    for i in (word_shift..reach.len()).rev() {
        let mut moved = reach[i - word_shift] << bit_shift;
        if bit_shift > 0 && i > word_shift {
            moved |= reach[i - word_shift - 1] >> (64 - bit_shift);
        }
        reach[i] |= moved;
    }
    let keep = cap % 64;
    if keep < 63 {
        reach[cap / 64] &= (1u64 << (keep + 1)) - 1;
    }
}

/// Largest set bit at or below `limit`; bit 0 is always set.
fn highest_at_most(reach: &[u64], limit: u32) -> u32 {
    let limit = limit as usize;
    let mut word = limit / 64;
    let mut mask = if limit % 64 < 63 {
        (1u64 << (limit % 64 + 1)) - 1
    } else {
        u64::MAX
    };
    if word >= reach.len() {
        word = reach.len() - 1;
        mask = u64::MAX;
    }
    loop {
        let bits = reach[word] & mask;
        if bits != 0 {
            return (word * 64 + 63 - bits.leading_zeros() as usize) as u32;
        }
        if word == 0 {
            return 0;
        }
        word -= 1;
        mask = u64::MAX;
    }
}
