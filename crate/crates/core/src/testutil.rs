//! Hand-built instances for unit tests.

use std::collections::BTreeSet;

use crate::scenario::{build_instance, Instance, Request, ScenarioConfig, ScenarioParams, SoftwareType, Vehicle};

/// Default power model; `requests` are `(demand_mhz, software)` and
/// `vehicles` are `(capacity_mhz, installed)`.
pub fn small_instance(
    requests: &[(u32, u32)],
    vehicles: &[(u32, &[u32])],
) -> Instance {
    let config = ScenarioConfig {
        scenario: ScenarioParams {
            request_count: requests.len(),
            vehicle_count: vehicles.len(),
            ..Default::default()
        },
        ..Default::default()
    };
    let alpha = config.scenario.alpha_bps_per_mhz().unwrap();
    let reqs = requests
        .iter()
        .enumerate()
        .map(|(id, &(d, s))| Request {
            id,
            demand_mhz: d,
            data_rate_bps: alpha * u64::from(d),
            software: SoftwareType(s),
        })
        .collect();
    let e = config.scenario.vehicle_energy_per_mhz();
    let vs = vehicles
        .iter()
        .enumerate()
        .map(|(id, &(cap, sw))| Vehicle {
            id,
            capacity_mhz: cap,
            energy_per_mhz: e,
            installed: sw.iter().map(|&s| SoftwareType(s)).collect::<BTreeSet<_>>(),
        })
        .collect();
    Instance::new(config, reqs, vs).unwrap()
}

/// A seeded small instance with optional tight side constraints and
/// per-vehicle processing energies.
#[derive(Debug, Clone)]
pub struct SmallCase {
    pub seed: u64,
    pub requests: usize,
    pub vehicles: usize,
    pub library: u32,
    pub packages: u32,
    pub demand: [u32; 2],
    /// Total cloud capacity, if it should differ from the default.
    pub cloud_mhz: Option<u32>,
    /// Capacity of the access-point group, if it should differ.
    pub fog_link_mbps: Option<f64>,
    /// Multipliers on each vehicle's energy per MHz; empty keeps them equal.
    pub energy_scale: Vec<f64>,
}

impl SmallCase {
    pub fn build(&self) -> Instance {
        let mut config = ScenarioConfig::default();
        let p = &mut config.scenario;
        p.seed = self.seed;
        p.request_count = self.requests;
        p.vehicle_count = self.vehicles;
        p.software_library_size = self.library;
        p.packages_per_vehicle = self.packages;
        p.demand_range_mhz = self.demand;
        if let Some(mhz) = self.cloud_mhz {
            let per_mhz = config.cloud.energy_per_mhz();
            config.cloud.server_count = 1;
            config.cloud.server_capacity_mhz = mhz;
            config.cloud.server_power_w = per_mhz * f64::from(mhz);
        }
        if let Some(mbps) = self.fog_link_mbps {
            for g in &mut config.paths.capacity_groups {
                if g.name == "access-point" {
                    g.capacity_mbps = mbps;
                }
            }
        }
        let base = build_instance(&config).unwrap();
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
        Instance::new(config, base.requests().to_vec(), vehicles).unwrap()
    }
}

pub fn small_cases() -> impl proptest::strategy::Strategy<Value = SmallCase> {
    use proptest::prelude::*;
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
        .prop_flat_map(|(seed, n, m, s, demand, cloud, link, energy)| {
            (s / 2..=s).prop_map(move |k| SmallCase {
                seed,
                requests: n,
                vehicles: m,
                library: s,
                packages: k,
                demand,
                cloud_mhz: cloud,
                fog_link_mbps: link,
                energy_scale: energy.clone(),
            })
        })
}
