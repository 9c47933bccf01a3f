//! Server placement: the MILP, its exact solver, and feasibility checks.

mod flow;
mod model;
mod solve;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::catalog::DeviceCatalog;
use crate::energy::{site_loads, EnergyError, EnergyOptions, Phase};
use crate::scenario::Scenario;
use crate::topology::{candidate_sites, link_hc_capacity, route, Topology, TopologyError};

pub use flow::{FlowResult, MinCostFlow};
pub use model::{export_lp, formulate, Constraint, MilpModel, Sense, VarKind, VarRole, Variable};
pub use solve::{infeasible_family, solve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// At most one server per candidate site.
    #[serde(rename = "SFA")]
    Sfa,
    /// Any number of servers at the OLT, at most one per ONT.
    #[serde(rename = "MFA")]
    Mfa,
    /// Everything processed in the cloud.
    #[serde(rename = "CA")]
    Ca,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Sfa, Mode::Mfa, Mode::Ca];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sfa => "SFA",
            Mode::Mfa => "MFA",
            Mode::Ca => "CA",
        }
    }

    /// Server cap for a site, `None` meaning unbounded.
    pub fn site_cap(self, is_olt: bool) -> Option<u32> {
        match self {
            Mode::Sfa => Some(1),
            Mode::Mfa if is_olt => None,
            Mode::Mfa => Some(1),
            Mode::Ca => Some(0),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SFA" => Ok(Mode::Sfa),
            "MFA" => Ok(Mode::Mfa),
            "CA" => Ok(Mode::Ca),
            other => Err(format!("unknown mode `{other}` (expected SFA, MFA or CA)")),
        }
    }
}

/// Server counts per candidate site and patients per (AP, site), both in
/// `candidate_sites` order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    pub mode: Mode,
    pub servers_per_site: Vec<u32>,
    pub assignment: Vec<Vec<u32>>,
}

impl Placement {
    pub fn cloud() -> Self {
        Placement {
            mode: Mode::Ca,
            servers_per_site: Vec::new(),
            assignment: Vec::new(),
        }
    }

    pub fn servers_total(&self) -> u32 {
        self.servers_per_site.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Optimality {
    ProvedOptimal,
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkLoad {
    pub phase: Phase,
    pub from: String,
    pub to: String,
    pub load_bps: f64,
    pub hc_capacity_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSolution {
    pub pat_max: u32,
    pub sites: Vec<String>,
    pub placement: Placement,
    /// Cloud processing instances (all-cloud approach only).
    pub cloud_servers: u32,
    pub objective_j: f64,
    pub optimality: Optimality,
    pub link_loads: Vec<LinkLoad>,
}

impl PlacementSolution {
    pub fn mode(&self) -> Mode {
        self.placement.mode
    }

    pub fn servers_total(&self) -> u32 {
        self.placement.servers_total()
    }

    pub fn servers_at(&self, site: &str) -> u32 {
        self.sites
            .iter()
            .position(|s| s == site)
            .map_or(0, |i| self.placement.servers_per_site[i])
    }

    /// Patients served at each site.
    pub fn site_patients(&self) -> Vec<u32> {
        let mut loads = vec![0; self.sites.len()];
        for row in &self.placement.assignment {
            for (s, &x) in row.iter().enumerate() {
                loads[s] += x;
            }
        }
        loads
    }

    /// `(site, servers, patients)` for every site that hosts a server.
    pub fn summary(&self) -> Vec<(String, u32, u32)> {
        let loads = self.site_patients();
        self.sites
            .iter()
            .zip(&self.placement.servers_per_site)
            .zip(loads)
            .filter(|((_, &y), n)| y > 0 || *n > 0)
            .map(|((site, &y), n)| (site.clone(), y, n))
            .collect()
    }

    fn infeasible(mode: Mode, pat_max: u32, sites: Vec<String>, n_aps: usize) -> Self {
        PlacementSolution {
            pat_max,
            placement: Placement {
                mode,
                servers_per_site: vec![0; sites.len()],
                assignment: vec![vec![0; sites.len()]; n_aps],
            },
            sites,
            cloud_servers: 0,
            objective_j: f64::INFINITY,
            optimality: Optimality::Infeasible,
            link_loads: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    mode: Mode,
    pat_max: u32,
    servers_per_site: BTreeMap<&'a str, u32>,
    assignment: BTreeMap<String, BTreeMap<&'a str, u32>>,
    cloud_servers: u32,
    objective_j: Option<f64>,
    optimality: Optimality,
}

impl Serialize for PlacementSolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let servers_per_site = self
            .sites
            .iter()
            .zip(&self.placement.servers_per_site)
            .filter(|(_, &y)| y > 0)
            .map(|(s, &y)| (s.as_str(), y))
            .collect();
        let assignment = self
            .placement
            .assignment
            .iter()
            .enumerate()
            .map(|(a, row)| {
                let targets = self
                    .sites
                    .iter()
                    .zip(row)
                    .filter(|(_, &x)| x > 0)
                    .map(|(s, &x)| (s.as_str(), x))
                    .collect();
                (format!("AP_{}", a + 1), targets)
            })
            .collect();
        SolutionJson {
            mode: self.placement.mode,
            pat_max: self.pat_max,
            servers_per_site,
            assignment,
            cloud_servers: self.cloud_servers,
            objective_j: self.objective_j.is_finite().then_some(self.objective_j),
            optimality: self.optimality,
        }
        .serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    pub energy: EnergyOptions,
    /// Charge idle power only for devices that carry traffic (activation
    /// binaries). When off, idle terms are left out of the objective.
    pub idle_activation: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            energy: EnergyOptions::default(),
            idle_activation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("model error: {0}")]
    Model(String),
}

/// Relative tolerance for objective ties and capacity checks.
pub const REL_TOL: f64 = 1e-9;

/// Ordering used everywhere a single optimum has to be picked: lower energy,
/// then fewer servers, then more servers at the OLT (the last site), then
/// ONT servers on the lowest-id ONTs.
pub fn is_better(objective: f64, servers: &[u32], incumbent: Option<(f64, &[u32])>) -> bool {
    let Some((best, best_servers)) = incumbent else {
        return true;
    };
    let tol = REL_TOL * objective.abs().max(best.abs()).max(1.0);
    if objective < best - tol {
        return true;
    }
    if objective > best + tol {
        return false;
    }
    tie_key(servers) < tie_key(best_servers)
}

fn tie_key(servers: &[u32]) -> (u32, std::cmp::Reverse<u32>, std::cmp::Reverse<&[u32]>) {
    let (olt, onts) = servers.split_last().map_or((0, &[][..]), |(o, rest)| (*o, rest));
    (servers.iter().sum(), std::cmp::Reverse(olt), std::cmp::Reverse(onts))
}

/// Aggregate healthcare rate on every loaded directed link, per phase.
pub fn link_loads(
    topology: &Topology,
    scenario: &Scenario,
    catalog: &DeviceCatalog,
    placement: &Placement,
) -> Result<Vec<LinkLoad>, PlacementError> {
    let sites = candidate_sites(topology);
    let mut loads: BTreeMap<(Phase, usize), f64> = BTreeMap::new();
    let mut site_load = vec![0u32; sites.len()];
    for (a, row) in placement.assignment.iter().enumerate() {
        for (s, &x) in row.iter().enumerate().filter(|(_, &x)| x > 0) {
            site_load[s] += x;
            for l in route(topology, topology.aps[a], sites[s])?.links {
                *loads.entry((Phase::RawUpload, l.0)).or_insert(0.0) +=
                    scenario.rates.r_ps * f64::from(x);
            }
        }
    }
    for (s, &n) in site_load.iter().enumerate().filter(|(_, &n)| n > 0) {
        for l in route(topology, sites[s], topology.storage)?.links {
            *loads.entry((Phase::AnalysedUpload, l.0)).or_insert(0.0) +=
                scenario.rates.r_cloud * f64::from(n);
        }
    }
    Ok(loads
        .into_iter()
        .map(|((phase, l), load_bps)| {
            let link = &topology.links[l];
            LinkLoad {
                phase,
                from: topology.name(link.from).to_string(),
                to: topology.name(link.to).to_string(),
                load_bps,
                hc_capacity_bps: link_hc_capacity(link, catalog),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: &'static str,
    pub entity: String,
    /// Capacity minus demand; negative when violated.
    pub slack: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at {} (slack {})", self.constraint, self.entity, self.slack)
    }
}

/// Every violated placement invariant; empty when the placement is feasible.
pub fn check_feasibility(
    topology: &Topology,
    scenario: &Scenario,
    catalog: &DeviceCatalog,
    placement: &Placement,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let sites = candidate_sites(topology);

    if placement.mode == Mode::Ca {
        for (s, &y) in placement.servers_per_site.iter().enumerate() {
            if y > 0 {
                out.push(Violation {
                    constraint: "mode_cap",
                    entity: topology.name(sites[s]).to_string(),
                    slack: -f64::from(y),
                });
            }
        }
        return out;
    }

    let loads = match site_loads(topology, placement) {
        Ok(loads) => loads,
        Err(EnergyError::InvalidPlacement(msg)) if msg.contains("patients assigned") => {
            for (a, row) in placement.assignment.iter().enumerate() {
                let assigned: u32 = row.iter().sum();
                let expected = topology.patients_per_ap[a];
                if assigned != expected {
                    out.push(Violation {
                        constraint: "completeness",
                        entity: topology.name(topology.aps[a]).to_string(),
                        slack: f64::from(expected) - f64::from(assigned),
                    });
                }
            }
            if out.iter().any(|v| v.constraint != "completeness") || !out.is_empty() {
                // capacity checks below still apply to a complete-shaped assignment
                let mut loads = vec![0u32; sites.len()];
                for row in &placement.assignment {
                    for (s, &x) in row.iter().enumerate() {
                        loads[s] += x;
                    }
                }
                check_capacities(topology, scenario, catalog, placement, &loads, &mut out);
            }
            return out;
        }
        Err(e) => {
            out.push(Violation {
                constraint: "shape",
                entity: e.to_string(),
                slack: f64::NAN,
            });
            return out;
        }
    };
    check_capacities(topology, scenario, catalog, placement, &loads, &mut out);
    out
}

fn check_capacities(
    topology: &Topology,
    scenario: &Scenario,
    catalog: &DeviceCatalog,
    placement: &Placement,
    loads: &[u32],
    out: &mut Vec<Violation>,
) {
    let sites = candidate_sites(topology);
    let pat_max = f64::from(scenario.pat_max());
    for (s, (&y, &n)) in placement.servers_per_site.iter().zip(loads).enumerate() {
        let name = topology.name(sites[s]).to_string();
        let slack = pat_max * f64::from(y) - f64::from(n);
        if slack < 0.0 {
            out.push(Violation {
                constraint: "server_capacity",
                entity: name.clone(),
                slack,
            });
        }
        if let Some(cap) = placement.mode.site_cap(sites[s] == topology.olt) {
            if y > cap {
                out.push(Violation {
                    constraint: "mode_cap",
                    entity: name,
                    slack: f64::from(cap) - f64::from(y),
                });
            }
        }
    }

    match link_loads(topology, scenario, catalog, placement) {
        Ok(link_loads) => {
            for l in link_loads {
                let slack = l.hc_capacity_bps - l.load_bps;
                if slack < -REL_TOL * l.hc_capacity_bps {
                    out.push(Violation {
                        constraint: "link_capacity",
                        entity: format!("{}->{} ({})", l.from, l.to, l.phase.tag()),
                        slack,
                    });
                }
            }
        }
        Err(e) => out.push(Violation {
            constraint: "routing",
            entity: e.to_string(),
            slack: f64::NAN,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;
    use crate::scenario::ScenarioParams;
    use crate::topology::{analysed_uplink_share, build_gpon, GponParams};

    fn setup(pat_max: u32) -> (Topology, Scenario, DeviceCatalog) {
        let cat = default_catalog();
        let t = build_gpon(&GponParams::default(), &cat).unwrap();
        let share = analysed_uplink_share(&t, &cat);
        let sc = Scenario::derive(ScenarioParams::with_pat_max(pat_max), share).unwrap();
        (t, sc, cat)
    }

    /// S2 with the OLT serving 100 patients and ONT_1 serving the other 100.
    fn two_site_s2(t: &Topology) -> Placement {
        let n_sites = t.onts.len() + 1;
        let olt = n_sites - 1;
        let mut servers = vec![0; n_sites];
        servers[0] = 1;
        servers[olt] = 1;
        let mut assignment = vec![vec![0; n_sites]; t.aps.len()];
        assignment[0][0] = 7;
        let mut to_ont = 93;
        for (a, &p) in t.patients_per_ap.iter().enumerate().skip(1) {
            let here = p.min(to_ont);
            to_ont -= here;
            assignment[a][0] = here;
            assignment[a][olt] = p - here;
        }
        Placement {
            mode: Mode::Sfa,
            servers_per_site: servers,
            assignment,
        }
    }

    #[test]
    fn downstream_share_binds_in_s2() {
        let (t, sc, cat) = setup(100);
        let v = check_feasibility(&t, &sc, &cat, &two_site_s2(&t));
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].constraint, "link_capacity");
        assert_eq!(v[0].entity, "OLT->ONT_1 (raw)");
        let load = 93.0 * sc.rates.r_ps;
        assert!((v[0].slack - (468_750.0 - load)).abs() < 1e-6);
        assert!(load > 777_000.0 && load < 787_000.0);
    }

    #[test]
    fn missing_patient_names_the_ap() {
        let (t, sc, cat) = setup(200);
        let n_sites = t.onts.len() + 1;
        let mut servers = vec![0; n_sites];
        servers[n_sites - 1] = 1;
        let mut assignment: Vec<Vec<u32>> = t
            .patients_per_ap
            .iter()
            .map(|&p| {
                let mut r = vec![0; n_sites];
                r[n_sites - 1] = p;
                r
            })
            .collect();
        assignment[9][n_sites - 1] -= 1;
        let p = Placement {
            mode: Mode::Sfa,
            servers_per_site: servers,
            assignment,
        };
        let v = check_feasibility(&t, &sc, &cat, &p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, "completeness");
        assert_eq!(v[0].entity, "AP_10");
        assert_eq!(v[0].slack, 1.0);
    }

    #[test]
    fn mode_caps_checked() {
        let (t, sc, cat) = setup(50);
        let n_sites = t.onts.len() + 1;
        let mut servers = vec![0; n_sites];
        servers[n_sites - 1] = 4;
        let assignment = t
            .patients_per_ap
            .iter()
            .map(|&p| {
                let mut r = vec![0; n_sites];
                r[n_sites - 1] = p;
                r
            })
            .collect();
        let mut p = Placement {
            mode: Mode::Mfa,
            servers_per_site: servers,
            assignment,
        };
        assert!(check_feasibility(&t, &sc, &cat, &p).is_empty());
        p.mode = Mode::Sfa;
        let v = check_feasibility(&t, &sc, &cat, &p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, "mode_cap");
        assert_eq!(v[0].entity, "OLT");
    }

    #[test]
    fn tie_break_prefers_fewer_then_smaller() {
        assert!(is_better(1.0, &[1, 0], None));
        assert!(is_better(1.0, &[0, 1], Some((2.0, &[0, 1]))));
        assert!(!is_better(1.0 + 1e-12, &[1, 0], Some((1.0, &[0, 1]))));
        assert!(is_better(1.0, &[0, 1], Some((1.0, &[1, 0]))));
        assert!(is_better(1.0, &[0, 1], Some((1.0, &[1, 1]))));
        assert!(is_better(1.0, &[1, 0, 1], Some((1.0, &[0, 1, 1]))));
        assert!(is_better(1.0, &[0, 0, 2], Some((1.0, &[1, 0, 1]))));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("sfa".parse::<Mode>().unwrap(), Mode::Sfa);
        assert_eq!("MFA".parse::<Mode>().unwrap(), Mode::Mfa);
        assert!("XYZ".parse::<Mode>().is_err());
        assert_eq!(Mode::Mfa.site_cap(true), None);
        assert_eq!(Mode::Sfa.site_cap(true), Some(1));
    }
}
