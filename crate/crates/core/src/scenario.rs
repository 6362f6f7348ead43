//! Domain types and seeded generation of requests, fleets and instances.
//!
//! Generation is a pure function of the configuration. Each consumer of
//! randomness draws from its own ChaCha stream so that changing the number of
//! installed packages never perturbs the request draw, and a vehicle's
//! installed set for `k` packages is always a prefix of its set for `k + 1`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::{CloudSpec, PathModel, PowerError};

const REQUEST_STREAM: u64 = 0;
const LEAD_PACKAGE_STREAM: u64 = 1;
const VEHICLE_STREAM_BASE: u64 = 2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("demand range is empty: min {min} > max {max}")]
    EmptyDemandRange { min: u32, max: u32 },
    #[error("alpha must be positive and a whole number of bit/s per MHz, got {0} Mbps/MHz")]
    InvalidAlpha(f64),
    #[error("software library must hold at least one type")]
    EmptyLibrary,
    #[error("packages per vehicle ({k}) exceeds library size ({library})")]
    TooManyPackages { k: u32, library: u32 },
    #[error("vehicle capacity must be positive")]
    ZeroVehicleCapacity,
    #[error("vehicle power must be finite and non-negative")]
    InvalidVehiclePower,
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("cannot parse document: {0}")]
    Parse(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SoftwareType(pub u32);

/// A user task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: usize,
    pub demand_mhz: u32,
    pub data_rate_bps: u64,
    pub software: SoftwareType,
}

impl Request {
    pub fn data_rate_mbps(&self) -> f64 {
        self.data_rate_bps as f64 / 1e6
    }
}

/// A parked vehicle offering its on-board unit as a fog processor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vehicle {
    pub id: usize,
    pub capacity_mhz: u32,
    pub energy_per_mhz: f64,
    pub installed: BTreeSet<SoftwareType>,
}

impl Vehicle {
    pub fn has(&self, software: SoftwareType) -> bool {
        self.installed.contains(&software)
    }
}

/// Scalar generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub seed: u64,
    pub request_count: usize,
    pub demand_range_mhz: [u32; 2],
    pub alpha_mbps_per_mhz: f64,
    pub software_library_size: u32,
    pub vehicle_count: usize,
    pub packages_per_vehicle: u32,
    pub vehicle_capacity_mhz: u32,
    pub vehicle_power_w: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            seed: 0,
            request_count: 50,
            demand_range_mhz: [100, 300],
            alpha_mbps_per_mhz: 0.008,
            software_library_size: 10,
            vehicle_count: 20,
            packages_per_vehicle: 10,
            vehicle_capacity_mhz: 240,
            vehicle_power_w: 3.6,
        }
    }
}

impl ScenarioParams {
    /// Alpha as an exact integer number of bit/s per MHz of demand.
    pub fn alpha_bps_per_mhz(&self) -> Result<u64, ConfigError> {
        let scaled = self.alpha_mbps_per_mhz * 1e6;
        let rounded = scaled.round();
        if !scaled.is_finite() || rounded < 1.0 || (scaled - rounded).abs() > 1e-6 * rounded {
            return Err(ConfigError::InvalidAlpha(self.alpha_mbps_per_mhz));
        }
        Ok(rounded as u64)
    }

    pub fn vehicle_energy_per_mhz(&self) -> f64 {
        self.vehicle_power_w / f64::from(self.vehicle_capacity_mhz)
    }
}

/// Full configuration document: generation parameters plus the power model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioParams,
    pub cloud: CloudSpec,
    pub paths: PathModel,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.scenario;
        let [min, max] = p.demand_range_mhz;
        if min > max {
            return Err(ConfigError::EmptyDemandRange { min, max });
        }
        p.alpha_bps_per_mhz()?;
        if p.software_library_size == 0 {
            return Err(ConfigError::EmptyLibrary);
        }
        if p.packages_per_vehicle > p.software_library_size {
            return Err(ConfigError::TooManyPackages {
                k: p.packages_per_vehicle,
                library: p.software_library_size,
            });
        }
        if p.vehicle_capacity_mhz == 0 {
            return Err(ConfigError::ZeroVehicleCapacity);
        }
        if !(p.vehicle_power_w >= 0.0) || !p.vehicle_power_w.is_finite() {
            return Err(ConfigError::InvalidVehiclePower);
        }
        self.cloud.validate()?;
        self.paths.validate()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&read(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate_requests(config: &ScenarioConfig) -> Result<Vec<Request>, ConfigError> {
    let p = &config.scenario;
    let [min, max] = p.demand_range_mhz;
    if min > max {
        return Err(ConfigError::EmptyDemandRange { min, max });
    }
    if p.software_library_size == 0 {
        return Err(ConfigError::EmptyLibrary);
    }
    let alpha = p.alpha_bps_per_mhz()?;
    let mut rng = stream(p.seed, REQUEST_STREAM);
    Ok((0..p.request_count)
        .map(|id| {
            let demand_mhz = rng.gen_range(min..=max);
            let software = SoftwareType(rng.gen_range(0..p.software_library_size));
            Request {
                id,
                demand_mhz,
                data_rate_bps: alpha * u64::from(demand_mhz),
                software,
            }
        })
        .collect())
}

/// Per-vehicle package ordering; the installed set is its first `k` entries.
///
/// The leading package of vehicle `v` is entry `v mod S` of a seeded shuffle
/// of the library, so a fleet at least as large as the library covers every
/// type with a single package per vehicle. The remaining order is a seeded
/// per-vehicle shuffle.
fn package_order(seed: u64, library: u32, vehicle: usize, lead: &[u32]) -> Vec<u32> {
    let first = lead[vehicle % lead.len()];
    let mut rest: Vec<u32> = (0..library).filter(|&s| s != first).collect();
    rest.shuffle(&mut stream(seed, VEHICLE_STREAM_BASE + vehicle as u64));
    std::iter::once(first).chain(rest).collect()
}

pub fn generate_fleet(config: &ScenarioConfig) -> Result<Vec<Vehicle>, ConfigError> {
    let p = &config.scenario;
    if p.software_library_size == 0 {
        return Err(ConfigError::EmptyLibrary);
    }
    if p.packages_per_vehicle > p.software_library_size {
        return Err(ConfigError::TooManyPackages {
            k: p.packages_per_vehicle,
            library: p.software_library_size,
        });
    }
    if p.vehicle_capacity_mhz == 0 {
        return Err(ConfigError::ZeroVehicleCapacity);
    }
    let mut lead: Vec<u32> = (0..p.software_library_size).collect();
    lead.shuffle(&mut stream(p.seed, LEAD_PACKAGE_STREAM));
    let energy_per_mhz = p.vehicle_energy_per_mhz();
    Ok((0..p.vehicle_count)
        .map(|id| Vehicle {
            id,
            capacity_mhz: p.vehicle_capacity_mhz,
            energy_per_mhz,
            installed: package_order(p.seed, p.software_library_size, id, &lead)
                .into_iter()
                .take(p.packages_per_vehicle as usize)
                .map(SoftwareType)
                .collect(),
        })
        .collect())
}

pub fn build_instance(config: &ScenarioConfig) -> Result<Instance, ConfigError> {
    config.validate()?;
    let requests = generate_requests(config)?;
    let vehicles = generate_fleet(config)?;
    Instance::new(config.clone(), requests, vehicles)
}

/// A complete, validated problem instance. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    config: ScenarioConfig,
    requests: Vec<Request>,
    vehicles: Vec<Vehicle>,
}

impl Instance {
    pub fn new(
        config: ScenarioConfig,
        requests: Vec<Request>,
        vehicles: Vec<Vehicle>,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let bad = |msg: String| Err(ConfigError::InvalidInstance(msg));
        let alpha = config.scenario.alpha_bps_per_mhz()?;
        let library = config.scenario.software_library_size;
        for (i, r) in requests.iter().enumerate() {
            if r.id != i {
                return bad(format!("request at position {i} has id {}", r.id));
            }
            if r.software.0 >= library {
                return bad(format!("request {i} uses software {} outside the library", r.software.0));
            }
            if r.data_rate_bps != alpha * u64::from(r.demand_mhz) {
                return bad(format!("request {i} data rate is not alpha x demand"));
            }
        }
        for (i, v) in vehicles.iter().enumerate() {
            if v.id != i {
                return bad(format!("vehicle at position {i} has id {}", v.id));
            }
            if v.capacity_mhz == 0 {
                return bad(format!("vehicle {i} has zero capacity"));
            }
            if !(v.energy_per_mhz >= 0.0) || !v.energy_per_mhz.is_finite() {
                return bad(format!("vehicle {i} has invalid energy per MHz"));
            }
            if v.installed.iter().any(|s| s.0 >= library) {
                return bad(format!("vehicle {i} installs software outside the library"));
            }
        }
        Ok(Self {
            config,
            requests,
            vehicles,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn paths(&self) -> &PathModel {
        &self.config.paths
    }

    pub fn cloud(&self) -> &CloudSpec {
        &self.config.cloud
    }

    pub fn total_demand_mhz(&self) -> u64 {
        self.requests.iter().map(|r| u64::from(r.demand_mhz)).sum()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let doc: InstanceDoc = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::try_from(doc)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&read(path)?)
    }
}

/// On-disk layout of an instance: `[scenario]`, `[[requests]]`,
/// `[[vehicles]]`, `[cloud]` and the `[paths.*]` tables.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    scenario: ScenarioParams,
    #[serde(default)]
    requests: Vec<Request>,
    #[serde(default)]
    vehicles: Vec<Vehicle>,
    cloud: CloudSpec,
    paths: PathModel,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = ConfigError;

    fn try_from(doc: InstanceDoc) -> Result<Self, Self::Error> {
        let config = ScenarioConfig {
            scenario: doc.scenario,
            cloud: doc.cloud,
            paths: doc.paths,
        };
        Instance::new(config, doc.requests, doc.vehicles)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> Self {
        InstanceDoc {
            scenario: inst.config.scenario,
            requests: inst.requests,
            vehicles: inst.vehicles,
            cloud: inst.config.cloud,
            paths: inst.config.paths,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(f: impl FnOnce(&mut ScenarioParams)) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        f(&mut c.scenario);
        c
    }

    #[test]
    fn empty_request_list() {
        let reqs = generate_requests(&config(|p| p.request_count = 0)).unwrap();
        assert!(reqs.is_empty());
    }

    #[test]
    fn default_requests_in_range() {
        for seed in 0..20 {
            let reqs = generate_requests(&config(|p| p.seed = seed)).unwrap();
            assert_eq!(reqs.len(), 50);
            for r in &reqs {
                assert!((100..=300).contains(&r.demand_mhz));
                assert!(r.software.0 < 10);
                assert_eq!(r.data_rate_bps, 8000 * u64::from(r.demand_mhz));
            }
        }
    }

    #[test]
    fn inverted_range_is_rejected() {
        let err = generate_requests(&config(|p| p.demand_range_mhz = [300, 100])).unwrap_err();
        assert!(matches!(err, ConfigError::EmptyDemandRange { min: 300, max: 100 }));
    }

    #[test]
    fn alpha_must_be_whole_bits_per_mhz() {
        assert_eq!(ScenarioParams::default().alpha_bps_per_mhz().unwrap(), 8000);
        let p = ScenarioParams {
            alpha_mbps_per_mhz: 1e-9,
            ..Default::default()
        };
        assert!(p.alpha_bps_per_mhz().is_err());
        let p = ScenarioParams {
            alpha_mbps_per_mhz: -0.1,
            ..Default::default()
        };
        assert!(p.alpha_bps_per_mhz().is_err());
    }

    #[test]
    fn fleet_extremes() {
        let none = generate_fleet(&config(|p| p.packages_per_vehicle = 0)).unwrap();
        assert_eq!(none.len(), 20);
        assert!(none.iter().all(|v| v.installed.is_empty()));
        let full = generate_fleet(&config(|p| p.packages_per_vehicle = 10)).unwrap();
        assert!(full.iter().all(|v| v.installed.len() == 10));
        let err = generate_fleet(&config(|p| p.packages_per_vehicle = 11)).unwrap_err();
        assert!(matches!(err, ConfigError::TooManyPackages { k: 11, library: 10 }));
    }

    #[test]
    fn fleet_sets_are_nested() {
        for seed in 0..10 {
            let fleets: Vec<_> = (0..=10)
                .map(|k| {
                    generate_fleet(&config(|p| {
                        p.seed = seed;
                        p.packages_per_vehicle = k;
                    }))
                    .unwrap()
                })
                .collect();
            for k in 0..10 {
                for (a, b) in fleets[k].iter().zip(&fleets[k + 1]) {
                    assert_eq!(a.installed.len(), k);
                    assert!(a.installed.is_subset(&b.installed));
                    assert_eq!(b.installed.len(), k + 1);
                }
            }
        }
    }

    #[test]
    fn requests_do_not_depend_on_packages() {
        let a = build_instance(&config(|p| p.packages_per_vehicle = 1)).unwrap();
        let b = build_instance(&config(|p| p.packages_per_vehicle = 7)).unwrap();
        assert_eq!(a.requests(), b.requests());
    }

    #[test]
    fn default_instance_shape() {
        let inst = build_instance(&ScenarioConfig::default()).unwrap();
        assert_eq!(inst.requests().len(), 50);
        assert_eq!(inst.vehicles().len(), 20);
        assert_eq!(inst.config().scenario.software_library_size, 10);
        assert_eq!(inst, build_instance(&ScenarioConfig::default()).unwrap());
    }

    #[test]
    fn instance_toml_round_trip() {
        let inst = build_instance(&config(|p| {
            p.seed = 42;
            p.packages_per_vehicle = 3;
        }))
        .unwrap();
        let text = inst.to_toml();
        for section in ["[scenario]", "[[requests]]", "[[vehicles]]", "[cloud]", "[[paths.fog]]", "[[paths.capacity_groups]]"] {
            assert!(text.contains(section), "missing {section}");
        }
        let back = Instance::from_toml(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn instance_validation_catches_tampering() {
        let inst = build_instance(&config(|p| p.request_count = 3)).unwrap();
        let text = inst.to_toml().replacen("data_rate_bps = ", "data_rate_bps = 1", 1);
        assert!(matches!(
            Instance::from_toml(&text),
            Err(ConfigError::InvalidInstance(_))
        ));
    }

    #[test]
    fn config_document_round_trip() {
        let c = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = ScenarioConfig::from_toml("[scenario]\nseed = 9\n").unwrap();
        assert_eq!(partial.scenario.seed, 9);
        assert_eq!(partial.paths, PathModel::default());
        assert!(ScenarioConfig::from_toml("[scenario]\nbogus = 1\n").is_err());
    }
}
