//! The assignment problem over an [`Instance`]: decision space, constraint
//! checking, objective and reporting metrics.
//!
//! Constraints: each request runs on exactly one processor; a vehicle only
//! runs requests whose software it has installed; per-vehicle processing
//! capacity; every link-capacity group carries at most its capacity; the cloud
//! servers together process at most their aggregate capacity.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::power::{network_power, processing_power, GroupScope, Target};
use crate::scenario::{Instance, Request};

/// One target per request, indexed by request id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    targets: Vec<Target>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AssignmentError {
    #[error("assignment covers {got} requests, instance has {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("request {request} targets vehicle {vehicle}, fleet has {fleet} vehicles")]
    UnknownVehicle {
        request: usize,
        vehicle: usize,
        fleet: usize,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Assignment {
    pub fn new(targets: Vec<Target>) -> Self {
        Self { targets }
    }

    pub fn all_cloud(instance: &Instance) -> Self {
        Self::new(vec![Target::Cloud; instance.requests().len()])
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn target(&self, request: usize) -> Target {
        self.targets[request]
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Checks the assignment is total over `instance` and names only
    /// existing vehicles.
    pub fn validate(&self, instance: &Instance) -> Result<(), AssignmentError> {
        let expected = instance.requests().len();
        if self.targets.len() != expected {
            return Err(AssignmentError::WrongLength {
                got: self.targets.len(),
                expected,
            });
        }
        let fleet = instance.vehicles().len();
        for (request, t) in self.targets.iter().enumerate() {
            if let Target::Vehicle(vehicle) = *t {
                if vehicle >= fleet {
                    return Err(AssignmentError::UnknownVehicle {
                        request,
                        vehicle,
                        fleet,
                    });
                }
            }
        }
        Ok(())
    }

    /// `request_id,target` per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (id, t) in self.targets.iter().enumerate() {
            let _ = writeln!(out, "{id},{t}");
        }
        out
    }

    /// Parses the `request_id,target` format. Lines may come in any order but
    /// must name each request id `0..n` exactly once.
    pub fn from_csv(text: &str) -> Result<Self, AssignmentError> {
        let mut slots: Vec<Option<Target>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| AssignmentError::Parse { line, msg };
            if raw.trim().is_empty() {
                continue;
            }
            let (id, target) = raw
                .split_once(',')
                .ok_or_else(|| err("expected `request_id,target`".into()))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| err(format!("bad request id `{}`", id.trim())))?;
            let target: Target = target.parse().map_err(|e| err(format!("{e}")))?;
            if slots.len() <= id {
                slots.resize(id + 1, None);
            }
            if slots[id].replace(target).is_some() {
                return Err(err(format!("request {id} assigned twice")));
            }
        }
        let targets = slots
            .into_iter()
            .enumerate()
            .map(|(id, t)| {
                t.ok_or(AssignmentError::Parse {
                    line: 0,
                    msg: format!("request {id} is missing"),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::new(targets))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    SoftwareMismatch,
    VehicleCapacity,
    LinkCapacity,
    CloudCapacity,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::SoftwareMismatch => "software_mismatch",
            ViolationKind::VehicleCapacity => "vehicle_capacity",
            ViolationKind::LinkCapacity => "link_capacity",
            ViolationKind::CloudCapacity => "cloud_capacity",
        })
    }
}

/// A violated constraint. Loads and limits are MHz for processing, Mbps for
/// links, and a count (1 against 0) for software mismatches.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub load: f64,
    pub limit: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on {}: load {} > limit {}",
            self.kind, self.subject, self.load, self.limit
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub total_power_w: f64,
    pub network_power_w: f64,
    pub processing_power_w: f64,
    pub cloud_workload_mhz: u64,
    pub fog_workload_mhz: u64,
    pub cloud_request_count: usize,
    pub fog_request_count: usize,
}

/// Targets a request may be sent to in isolation: the cloud, plus every
/// vehicle holding the request's software with enough capacity for it.
pub fn feasible_targets(request: &Request, instance: &Instance) -> Vec<Target> {
    instance
        .vehicles()
        .iter()
        .filter(|v| v.has(request.software) && request.demand_mhz <= v.capacity_mhz)
        .map(|v| Target::Vehicle(v.id))
        .chain(std::iter::once(Target::Cloud))
        .collect()
}

/// Every violated constraint of `assignment`; empty means feasible.
///
/// Panics if the assignment is not total over the instance or names a
/// vehicle outside the fleet.
pub fn check_feasible(assignment: &Assignment, instance: &Instance) -> Vec<Violation> {
    if let Err(e) = assignment.validate(instance) {
        panic!("check_feasible on malformed assignment: {e}");
    }
    let mut violations = Vec::new();
    let vehicles = instance.vehicles();
    let mut vehicle_load = vec![0u64; vehicles.len()];
    let mut cloud_load = 0u64;
    for (r, &t) in instance.requests().iter().zip(assignment.targets()) {
        match t {
            Target::Vehicle(v) => {
                vehicle_load[v] += u64::from(r.demand_mhz);
                if !vehicles[v].has(r.software) {
                    violations.push(Violation {
                        kind: ViolationKind::SoftwareMismatch,
                        subject: format!("request:{}@vehicle:{v}", r.id),
                        load: 1.0,
                        limit: 0.0,
                    });
                }
            }
            Target::Cloud => cloud_load += u64::from(r.demand_mhz),
        }
    }
    for (v, &load) in vehicles.iter().zip(&vehicle_load) {
        if load > u64::from(v.capacity_mhz) {
            violations.push(Violation {
                kind: ViolationKind::VehicleCapacity,
                subject: format!("vehicle:{}", v.id),
                load: load as f64,
                limit: f64::from(v.capacity_mhz),
            });
        }
    }
    let paths = instance.paths();
    for group in &paths.capacity_groups {
        let scope = paths.scope(group);
        let load: u64 = instance
            .requests()
            .iter()
            .zip(assignment.targets())
            .filter(|(_, &t)| scope.covers(t))
            .map(|(r, _)| r.data_rate_bps)
            .sum();
        if load > group.capacity_bps() {
            violations.push(Violation {
                kind: ViolationKind::LinkCapacity,
                subject: group.name.clone(),
                load: load as f64 / 1e6,
                limit: group.capacity_bps() as f64 / 1e6,
            });
        }
    }
    let cloud_capacity = instance.cloud().total_capacity_mhz();
    if cloud_load > cloud_capacity {
        violations.push(Violation {
            kind: ViolationKind::CloudCapacity,
            subject: "cloud".into(),
            load: cloud_load as f64,
            limit: cloud_capacity as f64,
        });
    }
    violations
}

/// Power (W) of one request placed on `target`.
pub fn request_power(request: &Request, target: Target, instance: &Instance) -> f64 {
    network_power(request, target, instance.paths()) + processing_power(request, target, instance)
}

/// Total power (W) of the assignment. Feasibility is not required.
///
/// Summed as network plus processing, exactly as [`metrics`] does, so that
/// the two never differ in the last bit.
pub fn objective(assignment: &Assignment, instance: &Instance) -> f64 {
    metrics(assignment, instance).total_power_w
}

pub fn metrics(assignment: &Assignment, instance: &Instance) -> Metrics {
    let mut m = Metrics {
        total_power_w: 0.0,
        network_power_w: 0.0,
        processing_power_w: 0.0,
        cloud_workload_mhz: 0,
        fog_workload_mhz: 0,
        cloud_request_count: 0,
        fog_request_count: 0,
    };
    for (r, &t) in instance.requests().iter().zip(assignment.targets()) {
        m.network_power_w += network_power(r, t, instance.paths());
        m.processing_power_w += processing_power(r, t, instance);
        if t.is_cloud() {
            m.cloud_workload_mhz += u64::from(r.demand_mhz);
            m.cloud_request_count += 1;
        } else {
            m.fog_workload_mhz += u64::from(r.demand_mhz);
            m.fog_request_count += 1;
        }
    }
    m.total_power_w = m.network_power_w + m.processing_power_w;
    m
}

#[derive(Debug, Clone)]
pub(crate) struct GroupLimit {
    pub scope: GroupScope,
    pub capacity_bps: u64,
}

/// Precomputed per-request costs and capacities used by the solvers.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub(crate) instance: &'a Instance,
    pub(crate) demand: Vec<u32>,
    pub(crate) rate: Vec<u64>,
    pub(crate) cloud_cost: Vec<f64>,
    /// `vehicle_cost[u][v]` is `Some` iff vehicle `v` is in `u`'s static
    /// feasible set.
    pub(crate) vehicle_cost: Vec<Vec<Option<f64>>>,
    pub(crate) vehicle_capacity: Vec<u32>,
    pub(crate) groups: Vec<GroupLimit>,
    pub(crate) cloud_capacity: u64,
}

impl<'a> Problem<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let requests = instance.requests();
        let vehicles = instance.vehicles();
        let vehicle_cost = requests
            .iter()
            .map(|r| {
                vehicles
                    .iter()
                    .map(|v| {
                        (v.has(r.software) && r.demand_mhz <= v.capacity_mhz)
                            .then(|| request_power(r, Target::Vehicle(v.id), instance))
                    })
                    .collect()
            })
            .collect();
        let paths = instance.paths();
        Self {
            instance,
            demand: requests.iter().map(|r| r.demand_mhz).collect(),
            rate: requests.iter().map(|r| r.data_rate_bps).collect(),
            cloud_cost: requests
                .iter()
                .map(|r| request_power(r, Target::Cloud, instance))
                .collect(),
            vehicle_cost,
            vehicle_capacity: vehicles.iter().map(|v| v.capacity_mhz).collect(),
            groups: paths
                .capacity_groups
                .iter()
                .map(|g| GroupLimit {
                    scope: paths.scope(g),
                    capacity_bps: g.capacity_bps(),
                })
                .collect(),
            cloud_capacity: instance.cloud().total_capacity_mhz(),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn request_count(&self) -> usize {
        self.demand.len()
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicle_capacity.len()
    }

    /// Cost of `u` on `target`, `None` if statically infeasible.
    pub fn cost(&self, u: usize, target: Target) -> Option<f64> {
        match target {
            Target::Cloud => Some(self.cloud_cost[u]),
            Target::Vehicle(v) => self.vehicle_cost[u][v],
        }
    }

    /// Requests sorted by descending demand, ties by ascending id.
    pub fn demand_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.request_count()).collect();
        order.sort_by(|&a, &b| self.demand[b].cmp(&self.demand[a]).then(a.cmp(&b)));
        order
    }

    /// Static targets of `u` in ascending cost; ties by vehicle id with the
    /// cloud last.
    pub fn ranked_targets(&self, u: usize) -> Vec<Target> {
        let mut targets: Vec<(f64, Target)> = self.vehicle_cost[u]
            .iter()
            .enumerate()
            .filter_map(|(v, c)| c.map(|c| (c, Target::Vehicle(v))))
            .chain(std::iter::once((self.cloud_cost[u], Target::Cloud)))
            .collect();
        targets.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        targets.into_iter().map(|(_, t)| t).collect()
    }

    /// The common rate σ (W per MHz) when every vehicle placement saves
    /// exactly `σ × demand` over the cloud. Objectives of complete
    /// assignments then differ by whole multiples of σ.
    pub fn saving_unit(&self) -> Option<f64> {
        let mut unit: Option<f64> = None;
        for u in 0..self.request_count() {
            if self.demand[u] == 0 {
                continue;
            }
            for cost in self.vehicle_cost[u].iter().flatten() {
                let per_mhz = (self.cloud_cost[u] - cost) / f64::from(self.demand[u]);
                match unit {
                    None => unit = Some(per_mhz),
                    Some(s) if (per_mhz - s).abs() <= 1e-12 * s.abs() => {}
                    Some(_) => return None,
                }
            }
        }
        unit.filter(|s| *s > 0.0)
    }

    /// A reason the instance can never be satisfied, independent of how
    /// requests are placed: a group that carries all traffic is overloaded,
    /// or some request fits neither the cloud nor any vehicle.
    pub fn structural_infeasibility(&self) -> Option<String> {
        let total_rate: u64 = self.rate.iter().sum();
        for (g, group) in self.groups.iter().enumerate() {
            if group.scope == GroupScope::All && total_rate > group.capacity_bps {
                let name = &self.instance.paths().capacity_groups[g].name;
                return Some(format!(
                    "link group `{name}` carries all traffic ({} Mbps) above its capacity ({} Mbps)",
                    total_rate as f64 / 1e6,
                    group.capacity_bps as f64 / 1e6
                ));
            }
        }
        for u in 0..self.request_count() {
            let cloud_ok = u64::from(self.demand[u]) <= self.cloud_capacity
                && self.groups.iter().all(|g| {
                    !g.scope.covers(Target::Cloud) || self.rate[u] <= g.capacity_bps
                });
            let fog_link_ok = self
                .groups
                .iter()
                .all(|g| !g.scope.covers(Target::Vehicle(0)) || self.rate[u] <= g.capacity_bps);
            let vehicle_ok = fog_link_ok && self.vehicle_cost[u].iter().any(Option::is_some);
            if !cloud_ok && !vehicle_ok {
                return Some(format!("request {u} fits no processor"));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_instance, ScenarioConfig, SoftwareType, Vehicle};
    use crate::testutil::small_instance;

    #[test]
    fn no_packages_means_cloud_only() {
        let mut c = ScenarioConfig::default();
        c.scenario.packages_per_vehicle = 0;
        let inst = build_instance(&c).unwrap();
        for r in inst.requests() {
            assert_eq!(feasible_targets(r, &inst), vec![Target::Cloud]);
        }
    }

    #[test]
    fn feasible_target_filters() {
        let inst = small_instance(&[(300, 0), (120, 3)], &[(240, &[0]), (240, &[3, 7])]);
        assert_eq!(feasible_targets(&inst.requests()[0], &inst), vec![Target::Cloud]);
        assert_eq!(
            feasible_targets(&inst.requests()[1], &inst),
            vec![Target::Vehicle(1), Target::Cloud]
        );
    }

    #[test]
    fn all_cloud_default_is_feasible() {
        for seed in 0..10 {
            let mut c = ScenarioConfig::default();
            c.scenario.seed = seed;
            let inst = build_instance(&c).unwrap();
            assert!(check_feasible(&Assignment::all_cloud(&inst), &inst).is_empty());
        }
    }

    #[test]
    fn vehicle_overload_is_reported() {
        let inst = small_instance(&[(150, 0), (150, 0)], &[(240, &[0])]);
        let a = Assignment::new(vec![Target::Vehicle(0), Target::Vehicle(0)]);
        let v = check_feasible(&a, &inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::VehicleCapacity);
        assert_eq!((v[0].load, v[0].limit), (300.0, 240.0));
    }

    #[test]
    fn software_mismatch_is_reported() {
        let inst = small_instance(&[(100, 1)], &[(240, &[0])]);
        let v = check_feasible(&Assignment::new(vec![Target::Vehicle(0)]), &inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::SoftwareMismatch);
        assert!(v[0].load > v[0].limit);
    }

    #[test]
    fn wireless_group_overload() {
        // 25 vehicles with one 200 MHz request each at 0.1 Mbps/MHz:
        // fog traffic 500 Mbps against the 450 Mbps wireless group.
        let mut config = ScenarioConfig::default();
        config.scenario.request_count = 25;
        config.scenario.vehicle_count = 25;
        config.scenario.alpha_mbps_per_mhz = 0.1;
        for g in &mut config.paths.capacity_groups {
            if g.name == "rsu" || g.name == "access-point" {
                g.capacity_mbps = 10_000.0;
            }
        }
        for d in &mut config.paths.shared {
            d.capacity_mbps = 10_000.0;
        }
        let reqs = (0..25)
            .map(|id| Request {
                id,
                demand_mhz: 200,
                data_rate_bps: 20_000_000,
                software: SoftwareType(0),
            })
            .collect();
        let vs = (0..25)
            .map(|id| Vehicle {
                id,
                capacity_mhz: 240,
                energy_per_mhz: 0.015,
                installed: [SoftwareType(0)].into_iter().collect(),
            })
            .collect();
        let inst = Instance::new(config, reqs, vs).unwrap();
        let a = Assignment::new((0..25).map(Target::Vehicle).collect());
        let v = check_feasible(&a, &inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::LinkCapacity);
        assert_eq!(v[0].subject, "wireless");
        assert_eq!((v[0].load, v[0].limit), (500.0, 450.0));
    }

    #[test]
    fn objective_examples() {
        let empty = small_instance(&[], &[]);
        assert_eq!(objective(&Assignment::new(vec![]), &empty), 0.0);
        let inst = small_instance(&[(200, 0)], &[(240, &[0])]);
        let cloud = objective(&Assignment::new(vec![Target::Cloud]), &inst);
        let fog = objective(&Assignment::new(vec![Target::Vehicle(0)]), &inst);
        assert!((cloud - 15.728).abs() < 1e-9, "{cloud}");
        assert!((fog - 3.291).abs() < 1e-9, "{fog}");
    }

    #[test]
    fn metrics_conservation() {
        let inst = build_instance(&ScenarioConfig::default()).unwrap();
        let m = metrics(&Assignment::all_cloud(&inst), &inst);
        assert_eq!(m.fog_workload_mhz, 0);
        assert_eq!(m.cloud_workload_mhz, inst.total_demand_mhz());
        assert_eq!(m.total_power_w, m.network_power_w + m.processing_power_w);
    }

    #[test]
    fn assignment_csv_round_trip_and_errors() {
        let a = Assignment::new(vec![Target::Cloud, Target::Vehicle(3), Target::Cloud]);
        assert_eq!(a.to_csv(), "0,cloud\n1,vehicle:3\n2,cloud\n");
        assert_eq!(Assignment::from_csv(&a.to_csv()).unwrap(), a);
        assert_eq!(
            Assignment::from_csv("1,cloud\n0,vehicle:0\n").unwrap().targets(),
            &[Target::Vehicle(0), Target::Cloud]
        );
        assert!(Assignment::from_csv("0,cloud\n0,cloud\n").is_err());
        assert!(Assignment::from_csv("1,cloud\n").is_err());
        assert!(Assignment::from_csv("0;cloud\n").is_err());
        let inst = small_instance(&[(100, 0)], &[(240, &[0])]);
        assert!(matches!(
            Assignment::new(vec![Target::Vehicle(4)]).validate(&inst),
            Err(AssignmentError::UnknownVehicle { vehicle: 4, .. })
        ));
    }

    #[test]
    fn ranked_targets_order() {
        let inst = small_instance(&[(100, 0)], &[(240, &[0]), (240, &[1]), (240, &[0])]);
        let p = Problem::new(&inst);
        assert_eq!(
            p.ranked_targets(0),
            vec![Target::Vehicle(0), Target::Vehicle(2), Target::Cloud]
        );
    }

    #[test]
    fn structural_infeasibility_on_rsu_overload() {
        let mut c = ScenarioConfig::default();
        c.scenario.alpha_mbps_per_mhz = 0.05;
        let inst = build_instance(&c).unwrap();
        assert!(Problem::new(&inst).structural_infeasibility().is_some());
        let inst = build_instance(&ScenarioConfig::default()).unwrap();
        assert!(Problem::new(&inst).structural_infeasibility().is_none());
    }
}
