//! Device power and capacity catalog, and the two-part power profile.
//!
//! Every device draws an idle floor plus a load-proportional term:
//! `idle_share * idle_fraction * p_max + (1 - idle_fraction) * p_max * u`.
//! Shared network gear only charges the healthcare share of its idle floor;
//! dedicated servers carry their whole idle floor.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Class keys of the default catalog.
pub mod class {
    pub const ACCESS_POINT: &str = "access point";
    pub const ONT: &str = "ONT";
    pub const OLT: &str = "OLT";
    pub const AGGREGATION_SWITCH: &str = "aggregation switch";
    pub const PROCESSING_SERVER: &str = "processing server";
    pub const CLOUD_SWITCH: &str = "cloud switch";
    pub const CLOUD_STORAGE: &str = "cloud storage";
    pub const CORE_ROUTER: &str = "core router";
    pub const CONTENT_SERVER: &str = "content server";
    pub const AGGREGATION_ROUTER: &str = "aggregation/cloud router";

    pub const ALL: [&str; 10] = [
        ACCESS_POINT,
        ONT,
        OLT,
        AGGREGATION_SWITCH,
        PROCESSING_SERVER,
        CLOUD_SWITCH,
        CLOUD_STORAGE,
        CORE_ROUTER,
        CONTENT_SERVER,
        AGGREGATION_ROUTER,
    ];
}

pub const NETWORK_IDLE_FRACTION: f64 = 0.9;
pub const SERVER_IDLE_FRACTION: f64 = 0.54;
pub const HEALTHCARE_SHARE: f64 = 0.003;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sharing {
    SharedNetwork,
    DedicatedServer,
}

impl Sharing {
    pub fn default_idle_fraction(self) -> f64 {
        match self {
            Sharing::SharedNetwork => NETWORK_IDLE_FRACTION,
            Sharing::DedicatedServer => SERVER_IDLE_FRACTION,
        }
    }
}

/// Throughput capacity for forwarding devices, volume for storage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capacity {
    Bps(f64),
    Bits(f64),
}

impl Capacity {
    pub fn value(self) -> f64 {
        match self {
            Capacity::Bps(v) | Capacity::Bits(v) => v,
        }
    }

    pub fn rate(self) -> Option<f64> {
        match self {
            Capacity::Bps(v) => Some(v),
            Capacity::Bits(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub name: String,
    /// Watts at full utilisation.
    pub p_max: f64,
    pub capacity: Option<Capacity>,
    pub idle_fraction: f64,
    pub sharing: Sharing,
}

impl DeviceSpec {
    pub fn new(name: &str, p_max: f64, capacity: Option<Capacity>, sharing: Sharing) -> Self {
        DeviceSpec {
            name: name.to_string(),
            p_max,
            capacity,
            idle_fraction: sharing.default_idle_fraction(),
            sharing,
        }
    }

    pub fn idle_power(&self) -> f64 {
        self.idle_fraction * self.p_max
    }

    /// Watts added per unit of utilisation.
    pub fn dynamic_range(&self) -> f64 {
        (1.0 - self.idle_fraction) * self.p_max
    }

    /// Share of the idle floor attributed to the application.
    pub fn idle_share(&self, hc_share: f64) -> f64 {
        match self.sharing {
            Sharing::SharedNetwork => hc_share,
            Sharing::DedicatedServer => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceCatalog {
    pub entries: BTreeMap<String, DeviceSpec>,
    pub hc_share: f64,
}

impl DeviceCatalog {
    pub fn get(&self, class: &str) -> Option<&DeviceSpec> {
        self.entries.get(class)
    }

    pub fn insert(&mut self, spec: DeviceSpec) {
        self.entries.insert(spec.name.clone(), spec);
    }
}

impl Default for DeviceCatalog {
    fn default() -> Self {
        default_catalog()
    }
}

pub fn default_catalog() -> DeviceCatalog {
    use Capacity::{Bits, Bps};
    use Sharing::{DedicatedServer, SharedNetwork};

    const GBPS: f64 = 1e9;
    // 75.6 TB of storage
    const STORAGE_BITS: f64 = 75.6e12 * 8.0;

    let specs = [
        DeviceSpec::new(class::ACCESS_POINT, 21.0, Some(Bps(0.3 * GBPS)), SharedNetwork),
        DeviceSpec::new(class::ONT, 8.0, Some(Bps(3.75 * GBPS)), SharedNetwork),
        DeviceSpec::new(class::OLT, 20.0, Some(Bps(128.0 * GBPS)), SharedNetwork),
        DeviceSpec::new(class::AGGREGATION_SWITCH, 1766.0, Some(Bps(256.0 * GBPS)), SharedNetwork),
        DeviceSpec::new(class::PROCESSING_SERVER, 3.96, None, DedicatedServer),
        DeviceSpec::new(class::CLOUD_SWITCH, 2020.0, Some(Bps(320.0 * GBPS)), SharedNetwork),
        DeviceSpec::new(class::CLOUD_STORAGE, 4900.0, Some(Bits(STORAGE_BITS)), SharedNetwork),
        DeviceSpec::new(class::CORE_ROUTER, 12300.0, Some(Bps(4480.0 * GBPS)), SharedNetwork),
        DeviceSpec::new(class::CONTENT_SERVER, 380.8, Some(Bps(1.8 * GBPS)), SharedNetwork),
        DeviceSpec::new(class::AGGREGATION_ROUTER, 4550.0, Some(Bps(560.0 * GBPS)), SharedNetwork),
    ];

    DeviceCatalog {
        entries: specs.into_iter().map(|s| (s.name.clone(), s)).collect(),
        hc_share: HEALTHCARE_SHARE,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("{what} = {value} is outside [0, 1]")]
    Domain { what: &'static str, value: f64 },
}

/// Watts attributed to the application for a device at the given utilisation.
pub fn attributable_power(
    spec: &DeviceSpec,
    utilization: f64,
    idle_share: f64,
) -> Result<f64, CatalogError> {
    if !(0.0..=1.0).contains(&utilization) {
        return Err(CatalogError::Domain {
            what: "utilization",
            value: utilization,
        });
    }
    if !(0.0..=1.0).contains(&idle_share) {
        return Err(CatalogError::Domain {
            what: "idle_share",
            value: idle_share,
        });
    }
    Ok(idle_share * spec.idle_fraction * spec.p_max + spec.dynamic_range() * utilization)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogViolation {
    pub class: String,
    pub rule: &'static str,
}

impl fmt::Display for CatalogViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class, self.rule)
    }
}

/// Every invariant violation in the catalog; empty means valid.
pub fn validate_catalog(catalog: &DeviceCatalog) -> Vec<CatalogViolation> {
    let mut report = Vec::new();
    let mut push = |class: &str, rule: &'static str| {
        report.push(CatalogViolation {
            class: class.to_string(),
            rule,
        })
    };

    if !(catalog.hc_share > 0.0 && catalog.hc_share <= 1.0) {
        push("hc_share", "0 < hc_share <= 1");
    }
    for required in class::ALL {
        if !catalog.entries.contains_key(required) {
            push(required, "required class missing");
        }
    }
    for (key, spec) in &catalog.entries {
        if !(spec.p_max > 0.0) {
            push(key, "p_max > 0");
        }
        if !(0.0..=1.0).contains(&spec.idle_fraction) {
            push(key, "0 <= idle_fraction <= 1");
        }
        if let Some(cap) = spec.capacity {
            if !(cap.value() > 0.0) {
                push(key, "capacity > 0");
            }
        }
        if key != &spec.name {
            push(key, "entry key matches device name");
        }
    }
    report
}
