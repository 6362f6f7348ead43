//! Exact search over groupings of shareable requests, for instances where
//! neither the cloud nor any link group can run out.
//!
//! A vehicle ends up hosting one block: a set of shareable requests that fit
//! together, or a single solo request. Once the shareable requests are
//! partitioned into blocks, the best placement is a minimum-cost assignment
//! of blocks and solo requests to vehicles and cloud slots. The search
//! enumerates partitions, each exactly once, and bounds partial ones by the
//! assignment of the blocks formed so far plus the cheapest target of every
//! request not yet placed in a block.

use std::time::Instant;

use super::assign::min_cost_assignment;
use crate::power::Target;
use crate::problem::{Assignment, Problem};

pub(crate) struct BlockSearch<'p, 'a> {
    problem: &'p Problem<'a>,
    shareable: Vec<usize>,
    solo: Vec<usize>,
    /// `remaining_cheapest[i]`: sum of `cheapest` over `shareable[i..]`.
    remaining_cheapest: Vec<f64>,
    blocks: Vec<Vec<usize>>,
    block_demand: Vec<u32>,
    saving_unit: Option<f64>,
    pub(crate) incumbent: f64,
    pub(crate) best: Option<Assignment>,
    pub(crate) nodes: u64,
    deadline: Option<Instant>,
    pub(crate) timed_out: bool,
}

/// Whether total cloud capacity and every link group cover all requests at
/// once, so that no assignment can violate them.
pub(crate) fn side_constraints_slack(problem: &Problem<'_>) -> bool {
    let demand: u64 = problem.demand.iter().map(|&d| u64::from(d)).sum();
    let rate: u64 = problem.rate.iter().sum();
    problem.cloud_capacity >= demand && problem.groups.iter().all(|g| g.capacity_bps >= rate)
}

impl<'p, 'a> BlockSearch<'p, 'a> {
    pub(crate) fn new(
        problem: &'p Problem<'a>,
        solo: &[bool],
        deadline: Option<Instant>,
    ) -> Self {
        let (shareable, solo_band): (Vec<usize>, Vec<usize>) =
            problem.demand_order().into_iter().partition(|&u| !solo[u]);
        let cheapest: Vec<f64> = (0..problem.request_count())
            .map(|u| {
                (0..problem.vehicle_count())
                    .filter(|&v| problem.demand[u] <= problem.vehicle_capacity[v])
                    .filter_map(|v| problem.vehicle_cost[u][v])
                    .fold(problem.cloud_cost[u], f64::min)
            })
            .collect();
        let mut remaining_cheapest = vec![0.0; shareable.len() + 1];
        for i in (0..shareable.len()).rev() {
            remaining_cheapest[i] = remaining_cheapest[i + 1] + cheapest[shareable[i]];
        }
        Self {
            problem,
            shareable,
            solo: solo_band,
            remaining_cheapest,
            blocks: Vec::new(),
            block_demand: Vec::new(),
            saving_unit: problem.saving_unit(),
            incumbent: f64::INFINITY,
            best: None,
            nodes: 0,
            deadline,
            timed_out: false,
        }
    }

    pub(crate) fn run(&mut self) {
        self.dfs(0);
    }

    fn hosts(&self, v: usize, items: &[usize], extra: Option<usize>, demand: u32) -> bool {
        let p = self.problem;
        demand <= p.vehicle_capacity[v]
            && items
                .iter()
                .chain(extra.as_ref())
                .all(|&u| p.vehicle_cost[u][v].is_some())
    }

    /// Rows: blocks, then solo requests. Columns: vehicles, then one cloud
    /// slot per row.
    fn placement(&self) -> Option<(f64, Vec<usize>)> {
        let p = self.problem;
        let m = p.vehicle_count();
        let rows: Vec<(&[usize], u32)> = self
            .blocks
            .iter()
            .zip(&self.block_demand)
            .map(|(b, &d)| (b.as_slice(), d))
            .chain(
                self.solo
                    .iter()
                    .map(|u| (std::slice::from_ref(u), p.demand[*u])),
            )
            .collect();
        let cost: Vec<Vec<f64>> = rows
            .iter()
            .map(|&(items, demand)| {
                let cloud: f64 = items.iter().map(|&u| p.cloud_cost[u]).sum();
                (0..m)
                    .map(|v| {
                        if self.hosts(v, items, None, demand) {
                            items
                                .iter()
                                .map(|&u| p.vehicle_cost[u][v].expect("hosted"))
                                .sum()
                        } else {
                            f64::INFINITY
                        }
                    })
                    .chain(std::iter::repeat(cloud).take(rows.len()))
                    .collect()
            })
            .collect();
        min_cost_assignment(&cost)
    }

    fn record(&mut self, total: f64, columns: &[usize]) {
        let p = self.problem;
        let m = p.vehicle_count();
        let mut targets = vec![Target::Cloud; p.request_count()];
        let rows = self
            .blocks
            .iter()
            .map(Vec::as_slice)
            .chain(self.solo.iter().map(std::slice::from_ref));
        for (items, &column) in rows.zip(columns) {
            if column < m {
                for &u in items {
                    targets[u] = Target::Vehicle(column);
                }
            }
        }
        self.incumbent = total;
        self.best = Some(Assignment::new(targets));
    }

    fn out_of_time(&mut self) -> bool {
        if !self.timed_out && (self.nodes - 1) % 64 == 0 {
            if let Some(deadline) = self.deadline {
                self.timed_out = Instant::now() >= deadline;
            }
        }
        self.timed_out
    }

    fn dfs(&mut self, i: usize) {
        self.nodes += 1;
        if self.out_of_time() {
            return;
        }
        let Some((placed, columns)) = self.placement() else {
            return;
        };
        if i == self.shareable.len() {
            if self.best.is_none() || placed < self.incumbent - super::tolerance(self.incumbent) {
                self.record(placed, &columns);
            }
            return;
        }
        let bound = placed + self.remaining_cheapest[i];
        if !super::can_improve(bound, self.incumbent, self.saving_unit) {
            return;
        }

        let u = self.shareable[i];
        let d = self.problem.demand[u];
        let m = self.problem.vehicle_count();
        for b in 0..self.blocks.len() {
            let demand = self.block_demand[b] + d;
            if !(0..m).any(|v| self.hosts(v, &self.blocks[b], Some(u), demand)) {
                continue;
            }
            self.blocks[b].push(u);
            self.block_demand[b] = demand;
            self.dfs(i + 1);
            self.blocks[b].pop();
            self.block_demand[b] -= d;
            if self.timed_out {
                return;
            }
        }
        self.blocks.push(vec![u]);
        self.block_demand.push(d);
        self.dfs(i + 1);
        self.blocks.pop();
        self.block_demand.pop();
    }
}

/// Whether no vehicle able to host `u` could host it together with any other
/// request.
pub(crate) fn is_solo(problem: &Problem<'_>, u: usize) -> bool {
    let d = problem.demand[u];
    (0..problem.vehicle_count()).all(|v| {
        let cap = problem.vehicle_capacity[v];
        if problem.vehicle_cost[u][v].is_none() || d > cap {
            return true;
        }
        (0..problem.request_count())
            .filter(|&w| w != u && problem.vehicle_cost[w][v].is_some())
            .all(|w| d + problem.demand[w] > cap)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::small_instance;

    #[test]
    fn cheapest_ignores_vehicles_too_small() {
        let inst = small_instance(&[(200, 0)], &[(150, &[0])]);
        let p = Problem::new(&inst);
        let search = BlockSearch::new(&p, &[false], None);
        assert_eq!(search.remaining_cheapest[0], p.cloud_cost[0]);
    }
}
