//! Device power models, the fog and cloud network paths, and the per-request
//! power terms that make up the assignment objective.
//!
//! Every network device is load-proportional: its energy per bit is its rated
//! power divided by its rated capacity, and a request pays
//! `data_rate × Σ energy_per_bit` over the devices it traverses. Processing is
//! charged per MHz of demand at the energy-per-MHz of the chosen processor.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{Instance, Request};

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("device `{0}` has non-positive capacity")]
    ZeroCapacity(String),
    #[error("device `{0}` has negative or non-finite power")]
    InvalidPower(String),
    #[error("device name `{0}` appears more than once in the path model")]
    DuplicateDevice(String),
    #[error("capacity group `{group}` references unknown device `{device}`")]
    UnknownGroupDevice { group: String, device: String },
    #[error("capacity group `{0}` must list at least one device and have positive capacity")]
    InvalidGroup(String),
    #[error("cloud spec: {0}")]
    InvalidCloud(&'static str),
}

/// A network device on a request path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub name: String,
    pub capacity_mbps: f64,
    pub power_w: f64,
}

impl DeviceSpec {
    pub fn new(name: impl Into<String>, capacity_mbps: f64, power_w: f64) -> Self {
        Self {
            name: name.into(),
            capacity_mbps,
            power_w,
        }
    }

    /// A device described by its energy per bit instead of its rated power.
    pub fn from_energy_per_bit(name: impl Into<String>, capacity_mbps: f64, joules_per_bit: f64) -> Self {
        Self::new(name, capacity_mbps, joules_per_bit * capacity_mbps * 1e6)
    }

    fn validate(&self) -> Result<(), PowerError> {
        if !(self.capacity_mbps > 0.0) || !self.capacity_mbps.is_finite() {
            return Err(PowerError::ZeroCapacity(self.name.clone()));
        }
        if !(self.power_w >= 0.0) || !self.power_w.is_finite() {
            return Err(PowerError::InvalidPower(self.name.clone()));
        }
        Ok(())
    }
}

/// Energy per bit (J/bit) of a device: rated power over rated capacity.
pub fn energy_per_bit(device: &DeviceSpec) -> Result<f64, PowerError> {
    if !(device.capacity_mbps > 0.0) {
        return Err(PowerError::ZeroCapacity(device.name.clone()));
    }
    Ok(device.power_w / (device.capacity_mbps * 1e6))
}

/// Central cloud processing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudSpec {
    pub server_capacity_mhz: u32,
    pub server_power_w: f64,
    pub server_count: u32,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self {
            server_capacity_mhz: 4000,
            server_power_w: 300.0,
            server_count: 4,
        }
    }
}

impl CloudSpec {
    pub fn energy_per_mhz(&self) -> f64 {
        self.server_power_w / f64::from(self.server_capacity_mhz)
    }

    /// Aggregate processing capacity of all servers, in MHz.
    pub fn total_capacity_mhz(&self) -> u64 {
        u64::from(self.server_capacity_mhz) * u64::from(self.server_count)
    }

    pub(crate) fn validate(&self) -> Result<(), PowerError> {
        if self.server_capacity_mhz == 0 {
            return Err(PowerError::InvalidCloud("server capacity must be positive"));
        }
        if !(self.server_power_w >= 0.0) || !self.server_power_w.is_finite() {
            return Err(PowerError::InvalidCloud("server power must be finite and non-negative"));
        }
        Ok(())
    }
}

/// A link-capacity constraint shared by every request that traverses any of
/// the listed devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityGroup {
    pub name: String,
    pub devices: Vec<String>,
    pub capacity_mbps: f64,
}

impl CapacityGroup {
    pub fn new(name: impl Into<String>, devices: &[&str], capacity_mbps: f64) -> Self {
        Self {
            name: name.into(),
            devices: devices.iter().map(|d| d.to_string()).collect(),
            capacity_mbps,
        }
    }

    /// Capacity resolved to whole bits per second.
    pub fn capacity_bps(&self) -> u64 {
        (self.capacity_mbps * 1e6).round() as u64
    }
}

/// Which requests load a capacity group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupScope {
    All,
    Fog,
    Cloud,
}

impl GroupScope {
    pub fn covers(self, target: Target) -> bool {
        match (self, target) {
            (GroupScope::All, _) => true,
            (GroupScope::Fog, Target::Vehicle(_)) => true,
            (GroupScope::Cloud, Target::Cloud) => true,
            _ => false,
        }
    }
}

/// The network between the RSU and the processing units.
///
/// `shared` devices carry every request; `fog` devices carry vehicle-bound
/// requests and `cloud` devices carry cloud-bound ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathModel {
    pub shared: Vec<DeviceSpec>,
    pub fog: Vec<DeviceSpec>,
    pub cloud: Vec<DeviceSpec>,
    pub capacity_groups: Vec<CapacityGroup>,
}

pub const DEFAULT_CLOUD_TRANSPORT_DELTA: f64 = 3.0e-7;
pub const DEFAULT_CLOUD_TRANSPORT_CAPACITY_MBPS: f64 = 10_000.0;

impl Default for PathModel {
    fn default() -> Self {
        Self {
            shared: vec![DeviceSpec::new("rsu", 100.0, 15.5)],
            fog: vec![
                DeviceSpec::new("access-point", 800.0, 21.5),
                DeviceSpec::new("wireless", 450.0, 0.0),
                DeviceSpec::new("obu-nic", 450.0, 0.0),
            ],
            cloud: vec![DeviceSpec::from_energy_per_bit(
                "cloud-transport",
                DEFAULT_CLOUD_TRANSPORT_CAPACITY_MBPS,
                DEFAULT_CLOUD_TRANSPORT_DELTA,
            )],
            capacity_groups: vec![
                CapacityGroup::new("rsu", &["rsu"], 100.0),
                CapacityGroup::new("access-point", &["access-point"], 800.0),
                CapacityGroup::new("wireless", &["wireless"], 450.0),
                CapacityGroup::new("cloud-transport", &["cloud-transport"], 10_000.0),
            ],
        }
    }
}

impl PathModel {
    pub fn validate(&self) -> Result<(), PowerError> {
        let mut seen = HashSet::new();
        for device in self.devices() {
            device.validate()?;
            if !seen.insert(device.name.as_str()) {
                return Err(PowerError::DuplicateDevice(device.name.clone()));
            }
        }
        for group in &self.capacity_groups {
            if group.devices.is_empty() || !(group.capacity_mbps > 0.0) {
                return Err(PowerError::InvalidGroup(group.name.clone()));
            }
            for name in &group.devices {
                if !seen.contains(name.as_str()) {
                    return Err(PowerError::UnknownGroupDevice {
                        group: group.name.clone(),
                        device: name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn devices(&self) -> impl Iterator<Item = &DeviceSpec> {
        self.shared.iter().chain(&self.fog).chain(&self.cloud)
    }

    /// Devices traversed by a request sent to `target`, in path order.
    pub fn chain(&self, target: Target) -> impl Iterator<Item = &DeviceSpec> {
        let tail = match target {
            Target::Vehicle(_) => &self.fog,
            Target::Cloud => &self.cloud,
        };
        self.shared.iter().chain(tail)
    }

    /// Σ energy-per-bit along the chain for `target`, J/bit.
    pub fn chain_energy_per_bit(&self, target: Target) -> f64 {
        self.chain(target)
            .map(|d| energy_per_bit(d).unwrap_or(0.0))
            .sum()
    }

    pub fn scope(&self, group: &CapacityGroup) -> GroupScope {
        let on = |list: &[DeviceSpec]| list.iter().any(|d| group.devices.contains(&d.name));
        match (on(&self.shared), on(&self.fog), on(&self.cloud)) {
            (true, _, _) | (false, true, true) => GroupScope::All,
            (false, true, false) => GroupScope::Fog,
            _ => GroupScope::Cloud,
        }
    }
}

/// Where a request is processed.
///
/// Ordering puts vehicles first by ascending id and the cloud last; brute-force
/// tie-breaking relies on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Vehicle(usize),
    Cloud,
}

impl Target {
    pub fn is_cloud(self) -> bool {
        matches!(self, Target::Cloud)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Vehicle(id) => write!(f, "vehicle:{id}"),
            Target::Cloud => f.write_str("cloud"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid target `{0}` (expected `cloud` or `vehicle:<id>`)")]
pub struct ParseTargetError(pub String);

impl FromStr for Target {
    type Err = ParseTargetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "cloud" {
            return Ok(Target::Cloud);
        }
        s.strip_prefix("vehicle:")
            .and_then(|id| id.parse().ok())
            .map(Target::Vehicle)
            .ok_or_else(|| ParseTargetError(s.to_string()))
    }
}

/// Network power (W) drawn by `request` on the path to `target`.
pub fn network_power(request: &Request, target: Target, paths: &PathModel) -> f64 {
    request.data_rate_bps as f64 * paths.chain_energy_per_bit(target)
}

/// Processing power (W) of running `request` on `target`.
pub fn processing_power(request: &Request, target: Target, instance: &Instance) -> f64 {
    let per_mhz = match target {
        Target::Vehicle(v) => instance.vehicles()[v].energy_per_mhz,
        Target::Cloud => instance.cloud().energy_per_mhz(),
    };
    f64::from(request.demand_mhz) * per_mhz
}
