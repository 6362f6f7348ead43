//! Search state and admissible lower bounds.

use crate::power::Target;
use super::assign::min_cost_assignment;
use crate::problem::{Assignment, Problem};

/// Non-improving subgradient steps tolerated before the step is halved.
const STALL_LIMIT: usize = 10;

/// A prefix of decisions with the residual capacities it leaves.
///
/// Decisions are pushed and popped in stack order; popping restores the
/// residuals and the accumulated cost exactly.
#[derive(Debug, Clone)]
pub struct PartialAssignment {
    targets: Vec<Option<Target>>,
    vehicle_residual: Vec<u32>,
    group_residual: Vec<u64>,
    cloud_residual: u64,
    cost: f64,
    trail: Vec<(usize, f64)>,
}

impl PartialAssignment {
    pub fn new(problem: &Problem<'_>) -> Self {
        Self {
            targets: vec![None; problem.request_count()],
            vehicle_residual: problem.vehicle_capacity.clone(),
            group_residual: problem.groups.iter().map(|g| g.capacity_bps).collect(),
            cloud_residual: problem.cloud_capacity,
            cost: 0.0,
            trail: Vec::new(),
        }
    }

    /// Accumulated power of the decided requests.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn target(&self, request: usize) -> Option<Target> {
        self.targets[request]
    }

    pub fn decided(&self) -> usize {
        self.trail.len()
    }

    pub fn is_complete(&self) -> bool {
        self.trail.len() == self.targets.len()
    }

    pub fn vehicle_residual(&self) -> &[u32] {
        &self.vehicle_residual
    }

    pub fn cloud_residual(&self) -> u64 {
        self.cloud_residual
    }

    /// Residual bit rate of each link capacity group.
    pub fn group_residuals(&self) -> &[u64] {
        &self.group_residual
    }

    /// Whether undecided request `u` can go to `target` given what is left.
    pub fn fits(&self, problem: &Problem<'_>, u: usize, target: Target) -> bool {
        if self.targets[u].is_some() || problem.cost(u, target).is_none() {
            return false;
        }
        let demand = problem.demand[u];
        let capacity_ok = match target {
            Target::Vehicle(v) => self.vehicle_residual[v] >= demand,
            Target::Cloud => self.cloud_residual >= u64::from(demand),
        };
        capacity_ok
            && problem
                .groups
                .iter()
                .zip(&self.group_residual)
                .all(|(g, &left)| !g.scope.covers(target) || left >= problem.rate[u])
    }

    /// Decides `u → target`. The caller checks [`fits`](Self::fits) first.
    pub fn push(&mut self, problem: &Problem<'_>, u: usize, target: Target) {
        debug_assert!(self.fits(problem, u, target));
        let demand = problem.demand[u];
        match target {
            Target::Vehicle(v) => self.vehicle_residual[v] -= demand,
            Target::Cloud => self.cloud_residual -= u64::from(demand),
        }
        for (g, left) in problem.groups.iter().zip(&mut self.group_residual) {
            if g.scope.covers(target) {
                *left -= problem.rate[u];
            }
        }
        self.trail.push((u, self.cost));
        self.cost += problem.cost(u, target).expect("checked by fits");
        self.targets[u] = Some(target);
    }

    /// Undoes the most recent decision.
    pub fn pop(&mut self, problem: &Problem<'_>) -> Option<(usize, Target)> {
        let (u, cost) = self.trail.pop()?;
        let target = self.targets[u].take().expect("trail entry is decided");
        let demand = problem.demand[u];
        match target {
            Target::Vehicle(v) => self.vehicle_residual[v] += demand,
            Target::Cloud => self.cloud_residual += u64::from(demand),
        }
        for (g, left) in problem.groups.iter().zip(&mut self.group_residual) {
            if g.scope.covers(target) {
                *left += problem.rate[u];
            }
        }
        self.cost = cost;
        Some((u, target))
    }

    pub fn to_assignment(&self) -> Option<Assignment> {
        self.targets
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .map(Assignment::new)
    }

    /// Whether vehicle-bound traffic of `rate` bit/s still fits every fog
    /// link group.
    pub(crate) fn fog_links_fit(&self, problem: &Problem<'_>, rate: u64) -> bool {
        problem
            .groups
            .iter()
            .zip(&self.group_residual)
            .all(|(g, &left)| !g.scope.covers(Target::Vehicle(0)) || left >= rate)
    }
}

/// Accumulated cost plus, for every undecided request, its cheapest target
/// that still fits on its own. Capacity coupling between undecided requests is
/// ignored, so the value never exceeds the cost of any feasible completion.
/// Returns infinity when some undecided request fits nowhere.
pub fn lower_bound(partial: &PartialAssignment, problem: &Problem<'_>) -> f64 {
    let mut bound = partial.cost();
    for u in 0..problem.request_count() {
        if partial.target(u).is_some() {
            continue;
        }
        let cloud = partial
            .fits(problem, u, Target::Cloud)
            .then_some(problem.cloud_cost[u]);
        let best = (0..problem.vehicle_count())
            .filter(|&v| partial.fits(problem, u, Target::Vehicle(v)))
            .filter_map(|v| problem.vehicle_cost[u][v])
            .chain(cloud)
            .min_by(f64::total_cmp);
        match best {
            Some(c) => bound += c,
            None => return f64::INFINITY,
        }
    }
    bound
}

/// Lagrangian bound over the undecided requests.
///
/// Solo requests cannot share a vehicle with any other request, so each
/// vehicle ends up with one solo request, a set of shareable requests, or
/// nothing. The "at most one vehicle" rows of the shareable requests are
/// priced with multipliers `λ ≥ 0`; what is left is an assignment of vehicles
/// to options, solved exactly:
///
/// `LB(λ) = cost + Σ_u cloud_u − Σ_{u shareable} λ_u − max Σ_v option_v`
///
/// where a vehicle's options are a fitting solo request (worth its saving,
/// each solo request used once) or its best knapsack of shareable requests
/// at profits `saving − λ`. Cloud capacity and link groups are relaxed. Any
/// `λ ≥ 0` gives a valid bound; a projected subgradient ascent improves it.
pub(crate) struct LagrangianBound {
    usage: Vec<u32>,
    items: Vec<(usize, u32, f64)>,
    value: Vec<f64>,
    keep: Vec<bool>,
    cache: Vec<(usize, u32, f64, Vec<usize>)>,
    /// Per vehicle, index into `cache` of its knapsack.
    chosen: Vec<usize>,
}

/// What the bound sees at a node.
pub(crate) struct KnapsackView<'s> {
    /// Undecided requests that may share a vehicle.
    pub shareable: &'s [usize],
    /// Undecided requests that never share a vehicle.
    pub solo: &'s [usize],
    /// Vehicles with equal class have equal costs on every undecided request.
    pub class_of: &'s [usize],
    /// Capacity left per vehicle.
    pub residual: &'s [u32],
}

impl LagrangianBound {
    pub(crate) fn new(problem: &Problem<'_>) -> Self {
        Self {
            usage: vec![0; problem.request_count()],
            items: Vec::new(),
            value: Vec::new(),
            keep: Vec::new(),
            cache: Vec::new(),
            chosen: vec![0; problem.vehicle_count()],
        }
    }

    fn evaluate(
        &mut self,
        problem: &Problem<'_>,
        partial: &PartialAssignment,
        view: &KnapsackView<'_>,
        lambda: &[f64],
    ) -> f64 {
        self.cache.clear();
        for &u in view.shareable {
            self.usage[u] = 0;
        }
        let mut bound = partial.cost();
        for &u in view.shareable {
            bound += problem.cloud_cost[u] - lambda[u];
        }
        for &u in view.solo {
            bound += problem.cloud_cost[u];
        }
        let m = problem.vehicle_count();
        for v in 0..m {
            let residual = view.residual[v];
            let class = view.class_of[v];
            let hit = self
                .cache
                .iter()
                .position(|(c, r, _, _)| *c == class && *r == residual);
            self.chosen[v] = match hit {
                Some(i) => i,
                None => {
                    let (value, taken) =
                        self.knapsack(problem, partial, view.shareable, lambda, v, residual);
                    self.cache.push((class, residual, value, taken));
                    self.cache.len() - 1
                }
            };
        }

        let solo_fits = |v: usize, w: usize| {
            problem.demand[w] <= view.residual[v]
                && partial.fog_links_fit(problem, problem.rate[w])
        };
        let useful_solo = view.solo.iter().any(|&w| {
            (0..m).any(|v| {
                problem.vehicle_cost[w][v].is_some_and(|c| c < problem.cloud_cost[w]) && solo_fits(v, w)
            })
        });
        if !useful_solo {
            for v in 0..m {
                let (_, _, value, taken) = &self.cache[self.chosen[v]];
                bound -= value;
                for &u in taken {
                    self.usage[u] += 1;
                }
            }
            return bound;
        }

        // Rows are vehicles; columns are the solo requests, then one private
        // knapsack column per vehicle.
        let columns = view.solo.len() + m;
        let cost: Vec<Vec<f64>> = (0..m)
            .map(|v| {
                let mut row = vec![f64::INFINITY; columns];
                for (j, &w) in view.solo.iter().enumerate() {
                    if let Some(c) = problem.vehicle_cost[w][v] {
                        if solo_fits(v, w) {
                            row[j] = c - problem.cloud_cost[w];
                        }
                    }
                }
                row[view.solo.len() + v] = -self.cache[self.chosen[v]].2;
                row
            })
            .collect();
        let (total, column) =
            min_cost_assignment(&cost).expect("every vehicle has its private column");
        bound += total;
        for v in 0..m {
            if column[v] >= view.solo.len() {
                for &u in &self.cache[self.chosen[v]].3 {
                    self.usage[u] += 1;
                }
            }
        }
        bound
    }

    fn knapsack(
        &mut self,
        problem: &Problem<'_>,
        partial: &PartialAssignment,
        undecided: &[usize],
        lambda: &[f64],
        v: usize,
        capacity: u32,
    ) -> (f64, Vec<usize>) {
        self.items.clear();
        for &u in undecided {
            let Some(cost) = problem.vehicle_cost[u][v] else {
                continue;
            };
            let weight = problem.demand[u];
            let profit = problem.cloud_cost[u] - cost - lambda[u];
            if profit > 0.0 && weight <= capacity && partial.fog_links_fit(problem, problem.rate[u]) {
                self.items.push((u, weight, profit));
            }
        }
        let total: u64 = self.items.iter().map(|&(_, w, _)| u64::from(w)).sum();
        if total <= u64::from(capacity) {
            let value = self.items.iter().map(|&(_, _, p)| p).sum();
            return (value, self.items.iter().map(|&(u, _, _)| u).collect());
        }
        let width = capacity as usize + 1;
        self.value.clear();
        self.value.resize(width, 0.0);
        self.keep.clear();
        self.keep.resize(self.items.len() * width, false);
        for (i, &(_, w, p)) in self.items.iter().enumerate() {
            let w = w as usize;
            let row = &mut self.keep[i * width..(i + 1) * width];
            for c in (w..width).rev() {
                let with = self.value[c - w] + p;
                if with > self.value[c] {
                    self.value[c] = with;
                    row[c] = true;
                }
            }
        }
        let mut taken = Vec::new();
        let mut c = capacity as usize;
        for (i, &(u, w, _)) in self.items.iter().enumerate().rev() {
            if self.keep[i * width + c] {
                taken.push(u);
                c -= w as usize;
            }
        }
        (self.value[capacity as usize], taken)
    }

    /// Runs up to `iterations` subgradient steps from `lambda`, aiming at
    /// `target` (the incumbent). Leaves the best multipliers in `lambda` and
    /// returns the best bound seen. Stops early once the bound reaches
    /// `target`.
    pub(crate) fn improve(
        &mut self,
        problem: &Problem<'_>,
        partial: &PartialAssignment,
        view: &KnapsackView<'_>,
        lambda: &mut [f64],
        target: f64,
        iterations: usize,
    ) -> f64 {
        let undecided = view.shareable;
        let mut best = f64::NEG_INFINITY;
        let mut best_lambda: Vec<f64> = undecided.iter().map(|&u| lambda[u]).collect();
        let mut step_scale = 1.0;
        let mut stalled = 0;
        for _ in 0..iterations.max(1) {
            let bound = self.evaluate(problem, partial, view, lambda);
            if bound > best {
                best = bound;
                for (slot, &u) in best_lambda.iter_mut().zip(undecided) {
                    *slot = lambda[u];
                }
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL_LIMIT {
                    step_scale *= 0.5;
                    stalled = 0;
                }
            }
            if best >= target {
                break;
            }
            let mut norm = 0.0;
            for &u in undecided {
                let g = f64::from(self.usage[u]) - 1.0;
                if g > 0.0 || lambda[u] > 0.0 {
                    norm += g * g;
                }
            }
            if norm == 0.0 {
                break;
            }
            let step = step_scale * (target - bound).max(1e-9) / norm;
            for &u in undecided {
                let g = f64::from(self.usage[u]) - 1.0;
                lambda[u] = (lambda[u] + step * g).max(0.0);
            }
        }
        for (&slot, &u) in best_lambda.iter().zip(undecided) {
            lambda[u] = slot;
        }
        best
    }
}
