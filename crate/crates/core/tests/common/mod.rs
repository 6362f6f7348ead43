//! Instance builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use vfog::power::Target;
use vfog::problem::{feasible_targets, Assignment};
use vfog::scenario::{build_instance, Instance, ScenarioConfig, Vehicle};

/// A seeded small scenario, optionally with a tight cloud or access point
/// and uneven vehicle energies.
#[derive(Debug, Clone)]
pub struct Small {
    pub seed: u64,
    pub requests: usize,
    pub vehicles: usize,
    pub library: u32,
    pub packages: u32,
    pub demand: [u32; 2],
    pub cloud_mhz: Option<u32>,
    pub access_point_mbps: Option<f64>,
    pub energy_scale: Vec<f64>,
}

impl Small {
    pub fn config(&self) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        let p = &mut c.scenario;
        p.seed = self.seed;
        p.request_count = self.requests;
        p.vehicle_count = self.vehicles;
        p.software_library_size = self.library;
        p.packages_per_vehicle = self.packages;
        p.demand_range_mhz = self.demand;
        if let Some(mhz) = self.cloud_mhz {
            let per_mhz = c.cloud.energy_per_mhz();
            c.cloud.server_count = 1;
            c.cloud.server_capacity_mhz = mhz;
            c.cloud.server_power_w = per_mhz * f64::from(mhz);
        }
        if let Some(mbps) = self.access_point_mbps {
            for g in &mut c.paths.capacity_groups {
                if g.name == "access-point" {
                    g.capacity_mbps = mbps;
                }
            }
        }
        c
    }

    pub fn build(&self) -> Instance {
        let base = build_instance(&self.config()).unwrap();
        if self.energy_scale.is_empty() {
            return base;
        }
        let vehicles = base
            .vehicles()
            .iter()
            .zip(self.energy_scale.iter().cycle())
            .map(|(v, s)| Vehicle {
                energy_per_mhz: v.energy_per_mhz * s,
                ..v.clone()
            })
            .collect();
        Instance::new(base.config().clone(), base.requests().to_vec(), vehicles).unwrap()
    }
}

/// Up to 8 requests, 3 vehicles and 4 software types.
pub fn small() -> impl Strategy<Value = Small> {
    (
        any::<u64>(),
        1usize..=8,
        1usize..=3,
        1u32..=4,
        prop::sample::select(vec![[100, 300], [20, 150], [50, 240]]),
        prop::option::weighted(0.3, 100u32..800),
        prop::option::weighted(0.3, 0.5f64..4.0),
        prop::collection::vec(prop::sample::select(vec![0.5, 1.0, 1.7, 3.0, 6.0]), 0..=3),
    )
        .prop_flat_map(|(seed, n, m, s, demand, cloud, ap, energy)| {
            (0..=s).prop_map(move |k| Small {
                seed,
                requests: n,
                vehicles: m,
                library: s,
                packages: k,
                demand,
                cloud_mhz: cloud,
                access_point_mbps: ap,
                energy_scale: energy.clone(),
            })
        })
}

/// Every power parameter of `instance` multiplied by `c`.
pub fn scaled(instance: &Instance, c: f64) -> Instance {
    let mut config = instance.config().clone();
    config.scenario.vehicle_power_w *= c;
    config.cloud.server_power_w *= c;
    for d in config
        .paths
        .shared
        .iter_mut()
        .chain(config.paths.fog.iter_mut())
        .chain(config.paths.cloud.iter_mut())
    {
        d.power_w *= c;
    }
    let vehicles = instance
        .vehicles()
        .iter()
        .map(|v| Vehicle {
            energy_per_mhz: v.energy_per_mhz * c,
            ..v.clone()
        })
        .collect();
    Instance::new(config, instance.requests().to_vec(), vehicles).unwrap()
}

/// Every total assignment over the per-request static candidate targets.
pub fn all_assignments(instance: &Instance) -> Vec<Assignment> {
    let options: Vec<Vec<Target>> = instance
        .requests()
        .iter()
        .map(|r| feasible_targets(r, instance))
        .collect();
    let mut out = vec![Vec::new()];
    for opts in &options {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Target>| {
                opts.iter().map(move |&t| {
                    let mut next = prefix.clone();
                    next.push(t);
                    next
                })
            })
            .collect();
    }
    out.into_iter().map(Assignment::new).collect()
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
