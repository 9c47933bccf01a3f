//! Attributable energy of a placement.
//!
//! Network devices are charged per phase: the healthcare share of their idle
//! floor for the phase duration (once per device, however many flows cross
//! it) plus the load-proportional term for the aggregate rate. Processing
//! servers are dedicated and carry their whole idle floor over the server
//! idle window.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{attributable_power, class, Capacity, CatalogError, DeviceCatalog, DeviceSpec};
use crate::placement::{Mode, Placement};
use crate::scenario::Scenario;
use crate::topology::{
    bottleneck_hc_capacity, candidate_sites, route, NodeId, Path, Topology, TopologyError,
};

/// Seconds in one 30-minute monitoring round.
pub const ROUND_SECONDS: f64 = 1800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    RawUpload,
    AnalysedUpload,
    CloudRawUpload,
}

impl Phase {
    pub fn tag(self) -> &'static str {
        match self {
            Phase::RawUpload => "raw",
            Phase::AnalysedUpload => "analysed",
            Phase::CloudRawUpload => "cloudraw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdleWindow {
    /// The deadline itself.
    #[default]
    Deadline,
    /// Deadline plus the analysed upload time.
    DeadlinePlusCloud,
    /// A full 30-minute recording round.
    Round,
}

impl IdleWindow {
    pub fn seconds(self, scenario: &Scenario) -> f64 {
        match self {
            IdleWindow::Deadline => scenario.params.t_total,
            IdleWindow::DeadlinePlusCloud => scenario.params.t_total + scenario.rates.t_cloud,
            IdleWindow::Round => ROUND_SECONDS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyOptions {
    pub server_idle_window: IdleWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFlow {
    pub path: Path,
    pub per_patient_rate: f64,
    pub n_patients: u32,
    pub duration: f64,
    pub phase: Phase,
}

impl PhaseFlow {
    pub fn aggregate_rate(&self) -> f64 {
        self.per_patient_rate * f64::from(self.n_patients)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub per_device_class: BTreeMap<String, f64>,
    pub network_j: f64,
    pub processing_j: f64,
    pub total_j: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("device class `{0}` is not in the catalog")]
    UnknownClass(String),
    #[error("device class `{0}` has no capacity to load")]
    MissingCapacity(String),
    #[error(transparent)]
    Domain(#[from] CatalogError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("busy time {busy} s exceeds idle window {window} s")]
    InfeasibleSchedule { busy: f64, window: f64 },
}

fn spec_of<'a>(
    topology: &Topology,
    catalog: &'a DeviceCatalog,
    node: NodeId,
) -> Result<&'a DeviceSpec, EnergyError> {
    let class = &topology.node(node).device_class;
    catalog
        .get(class)
        .ok_or_else(|| EnergyError::UnknownClass(class.clone()))
}

/// Utilisation one flow puts on a device.
fn load_share(spec: &DeviceSpec, rate: f64, duration: f64) -> Result<f64, EnergyError> {
    match spec.capacity {
        Some(Capacity::Bps(cap)) => Ok(rate / cap),
        Some(Capacity::Bits(volume)) => Ok(rate * duration / volume),
        None => Err(EnergyError::MissingCapacity(spec.name.clone())),
    }
}

/// Joules per device for a set of flows of one phase.
pub fn phase_energy(
    flows: &[PhaseFlow],
    topology: &Topology,
    catalog: &DeviceCatalog,
) -> Result<BTreeMap<NodeId, f64>, EnergyError> {
    // device -> (utilisation, longest active duration)
    let mut load: BTreeMap<NodeId, (f64, f64)> = BTreeMap::new();
    for flow in flows.iter().filter(|f| f.n_patients > 0) {
        let rate = flow.aggregate_rate();
        for &node in &flow.path.nodes {
            let spec = spec_of(topology, catalog, node)?;
            let u = load_share(spec, rate, flow.duration)?;
            let entry = load.entry(node).or_insert((0.0, 0.0));
            entry.0 += u;
            entry.1 = entry.1.max(flow.duration);
        }
    }

    load.into_iter()
        .map(|(node, (u, duration))| {
            let spec = spec_of(topology, catalog, node)?;
            let p = attributable_power(spec, u, spec.idle_share(catalog.hc_share))?;
            Ok((node, p * duration))
        })
        .collect()
}

pub fn flow_energy(
    flow: &PhaseFlow,
    topology: &Topology,
    catalog: &DeviceCatalog,
) -> Result<BTreeMap<NodeId, f64>, EnergyError> {
    phase_energy(std::slice::from_ref(flow), topology, catalog)
}

/// Energy one patient adds along a path, beyond the devices' idle terms.
pub fn per_patient_energy(
    path: &Path,
    rate: f64,
    duration: f64,
    topology: &Topology,
    catalog: &DeviceCatalog,
) -> Result<f64, EnergyError> {
    path.nodes.iter().try_fold(0.0, |acc, &node| {
        let spec = spec_of(topology, catalog, node)?;
        Ok(acc + spec.dynamic_range() * load_share(spec, rate, duration)? * duration)
    })
}

/// Idle energy attributed to a device active for `duration`.
pub fn idle_energy(
    node: NodeId,
    duration: f64,
    topology: &Topology,
    catalog: &DeviceCatalog,
) -> Result<f64, EnergyError> {
    let spec = spec_of(topology, catalog, node)?;
    Ok(spec.idle_share(catalog.hc_share) * spec.idle_power() * duration)
}

/// Energy of one server that processes `n_assigned` patients back to back.
pub fn processing_energy(
    server: &DeviceSpec,
    idle_share: f64,
    n_assigned: u32,
    unit_pa_time: f64,
    idle_window: f64,
) -> Result<f64, EnergyError> {
    let busy = f64::from(n_assigned) * unit_pa_time;
    if busy > idle_window * (1.0 + 1e-12) {
        return Err(EnergyError::InfeasibleSchedule {
            busy,
            window: idle_window,
        });
    }
    Ok(idle_share * server.idle_power() * idle_window + server.dynamic_range() * busy)
}

/// Splits a site's patients over its servers as evenly as possible.
pub fn split_load(n_patients: u32, servers: u32) -> Vec<u32> {
    if servers == 0 {
        return Vec::new();
    }
    let base = n_patients / servers;
    let extra = n_patients % servers;
    (0..servers).map(|i| base + u32::from(i < extra)).collect()
}

/// Number of cloud processing instances the all-cloud approach needs.
pub fn cloud_instances(n_patients: u32, pat_max: u32) -> u32 {
    n_patients.div_ceil(pat_max)
}

/// Rate each patient's analysed data gets from the content server to storage.
pub fn cloud_write_rate(topology: &Topology, catalog: &DeviceCatalog, scenario: &Scenario) -> f64 {
    bottleneck_hc_capacity(topology, catalog, topology.content_server, topology.storage)
        / f64::from(scenario.pat_max())
}

#[derive(Default)]
struct Accumulator {
    per_class: BTreeMap<String, f64>,
    network: f64,
    processing: f64,
}

impl Accumulator {
    fn network(&mut self, topology: &Topology, per_device: BTreeMap<NodeId, f64>) {
        for (node, joules) in per_device {
            *self
                .per_class
                .entry(topology.node(node).device_class.clone())
                .or_insert(0.0) += joules;
            self.network += joules;
        }
    }

    fn processing(&mut self, class: &str, joules: f64) {
        *self.per_class.entry(class.to_string()).or_insert(0.0) += joules;
        self.processing += joules;
    }

    fn finish(self) -> EnergyBreakdown {
        EnergyBreakdown {
            per_device_class: self.per_class,
            network_j: self.network,
            processing_j: self.processing,
            total_j: self.network + self.processing,
        }
    }
}

/// Per-site patient totals of a fog placement, checking the assignment shape.
pub fn site_loads(topology: &Topology, placement: &Placement) -> Result<Vec<u32>, EnergyError> {
    let n_sites = candidate_sites(topology).len();
    if placement.assignment.len() != topology.aps.len() {
        return Err(EnergyError::InvalidPlacement(format!(
            "assignment has {} rows for {} access points",
            placement.assignment.len(),
            topology.aps.len()
        )));
    }
    if placement.servers_per_site.len() != n_sites {
        return Err(EnergyError::InvalidPlacement(format!(
            "servers listed for {} sites, topology has {n_sites}",
            placement.servers_per_site.len()
        )));
    }
    let mut loads = vec![0u32; n_sites];
    for (a, row) in placement.assignment.iter().enumerate() {
        if row.len() != n_sites {
            return Err(EnergyError::InvalidPlacement(format!(
                "assignment row of {} has {} sites",
                topology.name(topology.aps[a]),
                row.len()
            )));
        }
        let assigned: u32 = row.iter().sum();
        if assigned != topology.patients_per_ap[a] {
            return Err(EnergyError::InvalidPlacement(format!(
                "{} has {assigned} of {} patients assigned",
                topology.name(topology.aps[a]),
                topology.patients_per_ap[a]
            )));
        }
        for (s, &x) in row.iter().enumerate() {
            loads[s] += x;
        }
    }
    Ok(loads)
}

pub fn evaluate(
    topology: &Topology,
    scenario: &Scenario,
    placement: &Placement,
    catalog: &DeviceCatalog,
    options: &EnergyOptions,
) -> Result<EnergyBreakdown, EnergyError> {
    match placement.mode {
        Mode::Ca => evaluate_cloud(topology, scenario, catalog, options),
        Mode::Sfa | Mode::Mfa => evaluate_fog(topology, scenario, placement, catalog, options),
    }
}

fn evaluate_fog(
    topology: &Topology,
    scenario: &Scenario,
    placement: &Placement,
    catalog: &DeviceCatalog,
    options: &EnergyOptions,
) -> Result<EnergyBreakdown, EnergyError> {
    let sites = candidate_sites(topology);
    let loads = site_loads(topology, placement)?;
    let rates = &scenario.rates;

    let mut raw = Vec::new();
    for (a, row) in placement.assignment.iter().enumerate() {
        for (s, &x) in row.iter().enumerate().filter(|(_, &x)| x > 0) {
            raw.push(PhaseFlow {
                path: route(topology, topology.aps[a], sites[s])?,
                per_patient_rate: rates.r_ps,
                n_patients: x,
                duration: scenario.timing.t_t,
                phase: Phase::RawUpload,
            });
        }
    }
    let mut analysed = Vec::new();
    for (s, &n) in loads.iter().enumerate().filter(|(_, &n)| n > 0) {
        analysed.push(PhaseFlow {
            path: route(topology, sites[s], topology.storage)?,
            per_patient_rate: rates.r_cloud,
            n_patients: n,
            duration: rates.t_cloud,
            phase: Phase::AnalysedUpload,
        });
    }

    let mut acc = Accumulator::default();
    acc.network(topology, phase_energy(&raw, topology, catalog)?);
    acc.network(topology, phase_energy(&analysed, topology, catalog)?);

    let server = catalog
        .get(class::PROCESSING_SERVER)
        .ok_or_else(|| EnergyError::UnknownClass(class::PROCESSING_SERVER.into()))?;
    let share = server.idle_share(catalog.hc_share);
    let window = options.server_idle_window.seconds(scenario);
    let unit = scenario.params.unit_pa_time();
    for (s, (&servers, &n)) in placement.servers_per_site.iter().zip(&loads).enumerate() {
        if servers == 0 && n > 0 {
            return Err(EnergyError::InvalidPlacement(format!(
                "{n} patients at {} which hosts no server",
                topology.name(sites[s])
            )));
        }
        for load in split_load(n, servers) {
            acc.processing(
                class::PROCESSING_SERVER,
                processing_energy(server, share, load, unit, window)?,
            );
        }
    }
    Ok(acc.finish())
}

fn evaluate_cloud(
    topology: &Topology,
    scenario: &Scenario,
    catalog: &DeviceCatalog,
    options: &EnergyOptions,
) -> Result<EnergyBreakdown, EnergyError> {
    let host = topology
        .parent(topology.content_server)
        .ok_or(TopologyError::Disconnected(topology.content_server, topology.olt))?;
    let n_total = topology.n_patients();

    let mut raw = Vec::new();
    for (&ap, &n) in topology.aps.iter().zip(&topology.patients_per_ap) {
        raw.push(PhaseFlow {
            path: route(topology, ap, host)?,
            per_patient_rate: scenario.rates.r_ps,
            n_patients: n,
            duration: scenario.timing.t_t,
            phase: Phase::CloudRawUpload,
        });
    }
    let write_rate = cloud_write_rate(topology, catalog, scenario);
    let write = PhaseFlow {
        path: route(topology, host, topology.storage)?,
        per_patient_rate: write_rate,
        n_patients: n_total,
        duration: scenario.params.processed_bits / write_rate,
        phase: Phase::AnalysedUpload,
    };

    let mut acc = Accumulator::default();
    acc.network(topology, phase_energy(&raw, topology, catalog)?);
    acc.network(topology, flow_energy(&write, topology, catalog)?);

    let server = catalog
        .get(class::CONTENT_SERVER)
        .ok_or_else(|| EnergyError::UnknownClass(class::CONTENT_SERVER.into()))?;
    let share = server.idle_share(catalog.hc_share);
    let window = options.server_idle_window.seconds(scenario);
    let unit = scenario.params.unit_pa_time();
    let pat_max = scenario.pat_max();
    let mut remaining = n_total;
    for _ in 0..cloud_instances(n_total, pat_max) {
        let load = remaining.min(pat_max);
        remaining -= load;
        acc.processing(
            class::CONTENT_SERVER,
            processing_energy(server, share, load, unit, window)?,
        );
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;
    use crate::scenario::ScenarioParams;
    use crate::topology::{build_gpon, GponParams};

    fn setup(pat_max: u32) -> (Topology, Scenario, DeviceCatalog) {
        let cat = default_catalog();
        let topo = build_gpon(&GponParams::default(), &cat).unwrap();
        let sc = Scenario::derive(ScenarioParams::with_pat_max(pat_max), 234_375.0).unwrap();
        (topo, sc, cat)
    }

    #[test]
    fn single_patient_at_access_point() {
        let (t, _, cat) = setup(50);
        let flow = PhaseFlow {
            path: Path {
                nodes: vec![t.aps[0]],
                links: vec![],
            },
            per_patient_rate: 8180.52,
            n_patients: 1,
            duration: 234.705,
            phase: Phase::RawUpload,
        };
        let e = flow_energy(&flow, &t, &cat).unwrap();
        let proportional: f64 = 0.1 * 21.0 * (8180.52 / 0.3e9) * 234.705;
        let idle: f64 = 0.003 * 0.9 * 21.0 * 234.705;
        assert!((proportional - 0.01344).abs() < 1e-5);
        assert!((idle - 13.30777).abs() < 1e-4);
        assert!((e[&t.aps[0]] - (proportional + idle)).abs() < 1e-12);
    }

    #[test]
    fn empty_flow_costs_nothing() {
        let (t, sc, cat) = setup(50);
        let flow = PhaseFlow {
            path: route(&t, t.aps[0], t.olt).unwrap(),
            per_patient_rate: sc.rates.r_ps,
            n_patients: 0,
            duration: sc.timing.t_t,
            phase: Phase::RawUpload,
        };
        assert!(flow_energy(&flow, &t, &cat).unwrap().is_empty());
    }

    #[test]
    fn doubling_patients_doubles_only_proportional_part() {
        let (t, sc, cat) = setup(50);
        let path = route(&t, t.aps[0], t.olt).unwrap();
        let mk = |n| PhaseFlow {
            path: path.clone(),
            per_patient_rate: sc.rates.r_ps,
            n_patients: n,
            duration: sc.timing.t_t,
            phase: Phase::RawUpload,
        };
        let total = |n| -> f64 { flow_energy(&mk(n), &t, &cat).unwrap().values().sum() };
        let idle: f64 = path
            .nodes
            .iter()
            .map(|&n| idle_energy(n, sc.timing.t_t, &t, &cat).unwrap())
            .sum();
        let p1 = total(3) - idle;
        let p2 = total(6) - idle;
        assert!((p2 - 2.0 * p1).abs() < 1e-9 * p2);
    }

    #[test]
    fn shared_device_idle_charged_once() {
        let (t, sc, cat) = setup(50);
        let flows: Vec<_> = (0..2)
            .map(|a| PhaseFlow {
                path: route(&t, t.aps[a], t.olt).unwrap(),
                per_patient_rate: sc.rates.r_ps,
                n_patients: 7,
                duration: sc.timing.t_t,
                phase: Phase::RawUpload,
            })
            .collect();
        let e = phase_energy(&flows, &t, &cat).unwrap();
        let idle = idle_energy(t.olt, sc.timing.t_t, &t, &cat).unwrap();
        let prop = 2.0 * per_patient_energy(
            &Path {
                nodes: vec![t.olt],
                links: vec![],
            },
            sc.rates.r_ps * 7.0,
            sc.timing.t_t,
            &t,
            &cat,
        )
        .unwrap();
        assert!((e[&t.olt] - (idle + prop)).abs() < 1e-12);
    }

    #[test]
    fn server_energy_examples() {
        let cat = default_catalog();
        let ps = cat.get(class::PROCESSING_SERVER).unwrap();
        let e = processing_energy(ps, 1.0, 50, 0.1059, 240.0).unwrap();
        let expected = 0.54 * 3.96 * 240.0 + 0.46 * 3.96 * 5.295;
        assert!((e - expected).abs() < 1e-9);
        assert!((e - 522.861).abs() < 1e-3);
        let idle = processing_energy(ps, 1.0, 0, 0.1059, 240.0).unwrap();
        assert!((idle - 513.216).abs() < 1e-9);
        let full = processing_energy(ps, 1.0, 100, 2.4, 240.0).unwrap();
        assert!((full - 3.96 * 240.0).abs() < 1e-9);
        assert!(matches!(
            processing_energy(ps, 1.0, 101, 2.4, 240.0),
            Err(EnergyError::InfeasibleSchedule { .. })
        ));
    }

    #[test]
    fn split_is_even() {
        assert_eq!(split_load(200, 4), vec![50; 4]);
        assert_eq!(split_load(7, 2), vec![4, 3]);
        assert!(split_load(5, 0).is_empty());
        assert_eq!(cloud_instances(200, 50), 4);
        assert_eq!(cloud_instances(200, 150), 2);
        assert_eq!(cloud_instances(0, 150), 0);
    }

    #[test]
    fn all_at_olt_uses_three_hop_paths() {
        let (t, sc, cat) = setup(200);
        let sites = candidate_sites(&t);
        let olt = sites.len() - 1;
        let mut servers = vec![0; sites.len()];
        servers[olt] = 1;
        let assignment = t
            .patients_per_ap
            .iter()
            .map(|&p| {
                let mut row = vec![0; sites.len()];
                row[olt] = p;
                row
            })
            .collect();
        let placement = Placement {
            mode: Mode::Mfa,
            servers_per_site: servers,
            assignment,
        };
        for &ap in &t.aps {
            assert_eq!(route(&t, ap, t.olt).unwrap().len(), 3);
        }
        let e = evaluate(&t, &sc, &placement, &cat, &EnergyOptions::default()).unwrap();
        assert_eq!(e.total_j, e.network_j + e.processing_j);
        let class_sum: f64 = e.per_device_class.values().sum();
        assert!((class_sum - e.total_j).abs() < 1e-9 * e.total_j);
        assert!(e.per_device_class.values().all(|&j| j >= 0.0));
        assert!(!e.per_device_class.contains_key(class::CONTENT_SERVER));
    }

    #[test]
    fn unassigned_patient_is_rejected() {
        let (t, sc, cat) = setup(200);
        let n_sites = candidate_sites(&t).len();
        let mut servers = vec![0; n_sites];
        servers[n_sites - 1] = 1;
        let mut assignment: Vec<Vec<u32>> = t
            .patients_per_ap
            .iter()
            .map(|&p| {
                let mut row = vec![0; n_sites];
                row[n_sites - 1] = p;
                row
            })
            .collect();
        assignment[4][n_sites - 1] -= 1;
        let placement = Placement {
            mode: Mode::Sfa,
            servers_per_site: servers,
            assignment,
        };
        let err = evaluate(&t, &sc, &placement, &cat, &EnergyOptions::default()).unwrap_err();
        assert!(matches!(err, EnergyError::InvalidPlacement(ref m) if m.contains("AP_5")));
    }

    #[test]
    fn cloud_breakdown_has_content_servers() {
        let (t, sc, cat) = setup(50);
        let e = evaluate(&t, &sc, &Placement::cloud(), &cat, &EnergyOptions::default()).unwrap();
        let cs = cat.get(class::CONTENT_SERVER).unwrap();
        let expected = 4.0 * 0.003 * 0.9 * 380.8 * 240.0 + 0.1 * 380.8 * 200.0 * sc.params.unit_pa_time();
        assert!((e.processing_j - expected).abs() < 1e-6);
        assert!((e.per_device_class[&cs.name] - expected).abs() < 1e-6);
        assert!(e.network_j > 0.0);
    }
}
