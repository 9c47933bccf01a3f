//! Brute-force reference optimiser.
//!
//! Enumerates server counts and per-server patient loads over classes of
//! interchangeable ONTs (ONTs whose APs have the same patient count), expands
//! each configuration into a concrete assignment greedily, and scores it with
//! [`energy::evaluate`](crate::energy::evaluate). It shares no code with the
//! solver beyond the energy model, the feasibility check and the tie-break.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{class, default_catalog, DeviceCatalog};
use crate::energy::{cloud_instances, evaluate, idle_energy, EnergyError};
use crate::placement::{
    check_feasibility, formulate, is_better, link_loads, solve, MilpModel, Mode, ModelOptions, Optimality,
    Placement, PlacementError, PlacementSolution, REL_TOL,
};
use crate::scenario::{Scenario, ScenarioError, ScenarioParams};
use crate::topology::{
    analysed_uplink_share, build_gpon, candidate_sites, link_hc_capacity, route, GponParams, Topology,
    TopologyError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    pub max_sites: usize,
    pub max_patients: u32,
    /// Configurations evaluated before giving up.
    pub max_configs: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_sites: 40,
            max_patients: 250,
            max_configs: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance exceeds the oracle budget: {0}")]
    BudgetExceeded(String),
    #[error("ONTs are not interchangeable: {0}")]
    Asymmetric(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

/// Servers and loads up to a permutation of same-class ONTs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetricConfig {
    pub k_olt: u32,
    pub olt_load: u32,
    /// Per ONT class, the loads of its servers in non-increasing order.
    pub ont_loads: Vec<Vec<u32>>,
}

struct Instance<'a> {
    topology: &'a Topology,
    scenario: &'a Scenario,
    catalog: &'a DeviceCatalog,
    options: &'a ModelOptions,
    mode: Mode,
    /// ONT site indices per class, ascending.
    classes: Vec<Vec<usize>>,
}

fn ont_classes(topology: &Topology, catalog: &DeviceCatalog) -> Result<Vec<Vec<usize>>, OracleError> {
    let first = |l: Option<crate::topology::LinkId>| l.map(|l| topology.link(l));
    let reference = (
        first(topology.link_between(topology.aps[0], topology.onts[0])),
        first(topology.link_between(topology.onts[0], topology.olt)),
        first(topology.link_between(topology.olt, topology.onts[0])),
    );
    let caps = |t: (Option<&crate::topology::Link>, Option<&crate::topology::Link>, Option<&crate::topology::Link>)| {
        [t.0, t.1, t.2].map(|l| l.map(|l| link_hc_capacity(l, catalog)))
    };
    for (i, (&ap, &ont)) in topology.aps.iter().zip(&topology.onts).enumerate() {
        let links = (
            first(topology.link_between(ap, ont)),
            first(topology.link_between(ont, topology.olt)),
            first(topology.link_between(topology.olt, ont)),
        );
        if caps(links) != caps(reference) || links.0.is_none() || links.1.is_none() {
            return Err(OracleError::Asymmetric(format!("links of {}", topology.name(ont))));
        }
        if topology.node(ont).device_class != class::ONT || topology.node(ap).device_class != class::ACCESS_POINT {
            return Err(OracleError::Asymmetric(format!("device classes at position {}", i + 1)));
        }
    }
    let mut classes: Vec<(u32, Vec<usize>)> = Vec::new();
    for (s, &p) in topology.patients_per_ap.iter().enumerate() {
        match classes.iter_mut().find(|(q, _)| *q == p) {
            Some((_, members)) => members.push(s),
            None => classes.push((p, vec![s])),
        }
    }
    Ok(classes.into_iter().map(|(_, m)| m).collect())
}

/// Home patients first, then foreign patients in AP order, the rest at the OLT.
pub fn expand(topology: &Topology, classes: &[Vec<usize>], mode: Mode, config: &SymmetricConfig) -> Placement {
    let n_aps = topology.aps.len();
    let olt = n_aps;
    let mut servers = vec![0u32; n_aps + 1];
    let mut loads = vec![0u32; n_aps + 1];
    servers[olt] = config.k_olt;
    loads[olt] = config.olt_load;
    for (members, class_loads) in classes.iter().zip(&config.ont_loads) {
        for (&s, &load) in members.iter().zip(class_loads) {
            servers[s] = 1;
            loads[s] = load;
        }
    }

    let mut assignment = vec![vec![0u32; n_aps + 1]; n_aps];
    let mut leftover = topology.patients_per_ap.clone();
    let mut demand = vec![0u32; n_aps];
    for s in 0..n_aps {
        let home = loads[s].min(leftover[s]);
        assignment[s][s] = home;
        leftover[s] -= home;
        demand[s] = loads[s] - home;
    }
    for s in 0..n_aps {
        for a in 0..n_aps {
            if demand[s] == 0 {
                break;
            }
            let take = demand[s].min(leftover[a]);
            assignment[a][s] += take;
            leftover[a] -= take;
            demand[s] -= take;
        }
    }
    for a in 0..n_aps {
        assignment[a][olt] += leftover[a];
    }
    Placement {
        mode,
        servers_per_site: servers,
        assignment,
    }
}

/// Non-increasing sequences of `len` values in `1..=max` summing to `total`.
fn partitions(total: u32, len: usize, max: u32, prefix: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32]) -> bool) -> bool {
    if len == 0 {
        return total != 0 || visit(prefix);
    }
    let len32 = len as u32;
    if total < len32 || u64::from(total) > u64::from(max) * u64::from(len32) {
        return true;
    }
    let hi = max.min(total - (len32 - 1));
    let lo = total.div_ceil(len32);
    for v in (lo..=hi).rev() {
        prefix.push(v);
        let go_on = partitions(total - v, len - 1, v, prefix, visit);
        prefix.pop();
        if !go_on {
            return false;
        }
    }
    true
}

fn class_loads(
    sizes: &[usize],
    counts: &[usize],
    total: u32,
    pat_max: u32,
    prefix: &mut Vec<Vec<u32>>,
    visit: &mut dyn FnMut(&[Vec<u32>]) -> bool,
) -> bool {
    let j = prefix.len();
    if j == sizes.len() {
        return total != 0 || visit(prefix);
    }
    let m = counts[j];
    let rest: u64 = counts[j + 1..].iter().map(|&c| c as u64).sum::<u64>() * u64::from(pat_max);
    let lo = (m as u32).max(total.saturating_sub(rest.min(u64::from(u32::MAX)) as u32));
    let hi = total.min((m as u32).saturating_mul(pat_max));
    if m == 0 {
        prefix.push(Vec::new());
        let go_on = class_loads(sizes, counts, total, pat_max, prefix, visit);
        prefix.pop();
        return go_on;
    }
    for sub in lo..=hi {
        let mut go_on = true;
        partitions(sub, m, pat_max, &mut Vec::new(), &mut |p| {
            prefix.push(p.to_vec());
            go_on = class_loads(sizes, counts, total - sub, pat_max, prefix, visit);
            prefix.pop();
            go_on
        });
        if !go_on {
            return false;
        }
    }
    true
}

fn count_vectors(sizes: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &size in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..=size).map(move |m| {
                    let mut v = prefix.clone();
                    v.push(m);
                    v
                })
            })
            .filter(|v| v.iter().sum::<usize>() <= k)
            .collect();
    }
    out.retain(|v| v.iter().sum::<usize>() == k);
    out
}

struct Best {
    objective: f64,
    placement: Placement,
}

fn consider(inst: &Instance, config: &SymmetricConfig, best: &mut Option<Best>) -> Result<(), OracleError> {
    let placement = expand(inst.topology, &inst.classes, inst.mode, config);
    if !check_feasibility(inst.topology, inst.scenario, inst.catalog, &placement).is_empty() {
        return Ok(());
    }
    let e = evaluate(inst.topology, inst.scenario, &placement, inst.catalog, &inst.options.energy)?;
    let incumbent = best.as_ref().map(|b| (b.objective, b.placement.servers_per_site.as_slice()));
    if is_better(e.total_j, &placement.servers_per_site, incumbent) {
        *best = Some(Best {
            objective: e.total_j,
            placement,
        });
    }
    Ok(())
}

/// Energy every fog placement pays whatever the configuration: idle of the
/// APs and ONTs that have patients during the raw upload, idle on the path
/// from the OLT to storage during the analysed upload, and busy processing.
fn fixed_lower_bound(topology: &Topology, scenario: &Scenario, catalog: &DeviceCatalog) -> Result<f64, OracleError> {
    let mut lb = 0.0;
    if topology.n_patients() == 0 {
        return Ok(lb);
    }
    for ((&ap, &ont), &p) in topology.aps.iter().zip(&topology.onts).zip(&topology.patients_per_ap) {
        if p > 0 {
            lb += idle_energy(ap, scenario.timing.t_t, topology, catalog)?;
            lb += idle_energy(ont, scenario.timing.t_t, topology, catalog)?;
        }
    }
    for node in route(topology, topology.olt, topology.storage)?.nodes {
        lb += idle_energy(node, scenario.rates.t_cloud, topology, catalog)?;
    }
    let server = catalog
        .get(class::PROCESSING_SERVER)
        .ok_or_else(|| EnergyError::UnknownClass(class::PROCESSING_SERVER.into()))?;
    lb += server.dynamic_range() * scenario.params.unit_pa_time() * f64::from(topology.n_patients());
    Ok(lb)
}

pub fn enumerate_optimal(
    topology: &Topology,
    scenario: &Scenario,
    mode: Mode,
    catalog: &DeviceCatalog,
    options: &ModelOptions,
) -> Result<PlacementSolution, OracleError> {
    enumerate_optimal_with(topology, scenario, mode, catalog, options, &OracleBudget::default())
}

pub fn enumerate_optimal_with(
    topology: &Topology,
    scenario: &Scenario,
    mode: Mode,
    catalog: &DeviceCatalog,
    options: &ModelOptions,
    budget: &OracleBudget,
) -> Result<PlacementSolution, OracleError> {
    let sites = candidate_sites(topology);
    let names: Vec<String> = sites.iter().map(|&s| topology.name(s).to_string()).collect();
    let n_patients = topology.n_patients();
    let pat_max = scenario.pat_max();
    if sites.len() > budget.max_sites {
        return Err(OracleError::BudgetExceeded(format!(
            "{} candidate sites (limit {})",
            sites.len(),
            budget.max_sites
        )));
    }
    if n_patients > budget.max_patients {
        return Err(OracleError::BudgetExceeded(format!(
            "{n_patients} patients (limit {})",
            budget.max_patients
        )));
    }
    if !options.idle_activation {
        return Err(OracleError::BudgetExceeded(
            "the oracle scores placements by evaluated energy and needs activation binaries on".into(),
        ));
    }

    if mode == Mode::Ca {
        let placement = Placement::cloud();
        let e = evaluate(topology, scenario, &placement, catalog, &options.energy)?;
        return Ok(PlacementSolution {
            pat_max,
            sites: names,
            placement,
            cloud_servers: cloud_instances(n_patients, pat_max),
            objective_j: e.total_j,
            optimality: Optimality::ProvedOptimal,
            link_loads: Vec::new(),
        });
    }

    let inst = Instance {
        topology,
        scenario,
        catalog,
        options,
        mode,
        classes: ont_classes(topology, catalog)?,
    };
    let sizes: Vec<usize> = inst.classes.iter().map(Vec::len).collect();
    let n_ont = topology.onts.len();
    let needed = n_patients.div_ceil(pat_max);
    let olt_max = mode.site_cap(true).map_or(needed, |c| c.min(needed)) as usize;
    let ont_cap = mode.site_cap(false).unwrap_or(1).min(1) as usize;
    let server = catalog
        .get(class::PROCESSING_SERVER)
        .ok_or_else(|| EnergyError::UnknownClass(class::PROCESSING_SERVER.into()))?;
    let server_j =
        server.idle_share(catalog.hc_share) * server.idle_power() * options.energy.server_idle_window.seconds(scenario);
    let lb_fixed = fixed_lower_bound(topology, scenario, catalog)?;

    let mut best: Option<Best> = None;
    let mut evaluated = 0u64;
    let mut failure: Option<OracleError> = None;
    let k_max = olt_max + ont_cap * n_ont;
    for k in (needed as usize)..=k_max {
        if let Some(b) = &best {
            if k as f64 * server_j + lb_fixed > b.objective + REL_TOL * b.objective.abs().max(1.0) {
                break;
            }
        }
        for k_olt in 0..=olt_max.min(k) {
            let k_ont = k - k_olt;
            if k_ont > ont_cap * n_ont {
                continue;
            }
            // OLT loads that actually need k_olt servers
            let olt_lo = if k_olt == 0 { 0 } else { (k_olt as u32 - 1) * pat_max + 1 };
            let olt_hi = (k_olt as u32).saturating_mul(pat_max).min(n_patients);
            if olt_lo > olt_hi {
                continue;
            }
            for counts in count_vectors(&sizes, k_ont) {
                for olt_load in olt_lo..=olt_hi {
                    let mut visit = |loads: &[Vec<u32>]| -> bool {
                        evaluated += 1;
                        if evaluated > budget.max_configs {
                            failure = Some(OracleError::BudgetExceeded(format!(
                                "more than {} configurations",
                                budget.max_configs
                            )));
                            return false;
                        }
                        let config = SymmetricConfig {
                            k_olt: k_olt as u32,
                            olt_load,
                            ont_loads: loads.to_vec(),
                        };
                        if let Err(e) = consider(&inst, &config, &mut best) {
                            failure = Some(e);
                            return false;
                        }
                        true
                    };
                    class_loads(&sizes, &counts, n_patients - olt_load, pat_max, &mut Vec::new(), &mut visit);
                    if let Some(e) = failure.take() {
                        return Err(e);
                    }
                }
            }
        }
    }

    let Some(best) = best else {
        return Ok(PlacementSolution {
            pat_max,
            placement: Placement {
                mode,
                servers_per_site: vec![0; names.len()],
                assignment: vec![vec![0; names.len()]; topology.aps.len()],
            },
            sites: names,
            cloud_servers: 0,
            objective_j: f64::INFINITY,
            optimality: Optimality::Infeasible,
            link_loads: Vec::new(),
        });
    };
    Ok(PlacementSolution {
        pat_max,
        link_loads: link_loads(topology, scenario, catalog, &best.placement)?,
        sites: names,
        placement: best.placement,
        cloud_servers: 0,
        objective_j: best.objective,
        optimality: Optimality::ProvedOptimal,
    })
}

/// One randomized or hand-built instance for the equivalence check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleInstance {
    pub gpon: GponParams,
    pub scenario: ScenarioParams,
    pub mode: Mode,
    #[serde(skip)]
    pub catalog: DeviceCatalog,
    pub options: ModelOptions,
}

impl OracleInstance {
    pub fn new(gpon: GponParams, scenario: ScenarioParams, mode: Mode) -> Self {
        OracleInstance {
            gpon,
            scenario,
            mode,
            catalog: default_catalog(),
            options: ModelOptions::default(),
        }
    }

    pub fn build(&self) -> Result<(Topology, Scenario), OracleError> {
        let topology = build_gpon(&self.gpon, &self.catalog)?;
        let share = analysed_uplink_share(&topology, &self.catalog);
        let scenario = Scenario::derive(self.scenario.clone(), share)?;
        Ok((topology, scenario))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub index: usize,
    pub passed: bool,
    pub solver_objective: Option<f64>,
    pub oracle_objective: Option<f64>,
    pub solver_servers: Vec<u32>,
    pub oracle_servers: Vec<u32>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EquivalenceReport {
    pub outcomes: Vec<InstanceOutcome>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn first_failure(&self) -> Option<&InstanceOutcome> {
        self.outcomes.iter().find(|o| !o.passed)
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn compare_one<F>(index: usize, instance: &OracleInstance, solver: &F) -> InstanceOutcome
where
    F: Fn(&MilpModel) -> Result<PlacementSolution, PlacementError>,
{
    let fail = |detail: String| InstanceOutcome {
        index,
        passed: false,
        solver_objective: None,
        oracle_objective: None,
        solver_servers: Vec::new(),
        oracle_servers: Vec::new(),
        detail,
    };
    let (topology, scenario) = match instance.build() {
        Ok(x) => x,
        Err(e) => return fail(format!("instance: {e}")),
    };
    let model = match formulate(&topology, &scenario, instance.mode, &instance.catalog, &instance.options) {
        Ok(m) => m,
        Err(e) => return fail(format!("formulate: {e}")),
    };
    let ours = match solver(&model) {
        Ok(s) => s,
        Err(e) => return fail(format!("solver: {e}")),
    };
    let reference = match enumerate_optimal(&topology, &scenario, instance.mode, &instance.catalog, &instance.options)
    {
        Ok(s) => s,
        Err(e) => return fail(format!("oracle: {e}")),
    };

    let both_infeasible =
        ours.optimality == Optimality::Infeasible && reference.optimality == Optimality::Infeasible;
    let objective_ok = both_infeasible || {
        let (a, b) = (ours.objective_j, reference.objective_j);
        a.is_finite() && b.is_finite() && (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
    };
    let servers_ok = ours.placement.servers_per_site == reference.placement.servers_per_site;
    let detail = match (objective_ok, servers_ok) {
        (true, true) => String::new(),
        (false, _) => format!("objective {} vs oracle {}", ours.objective_j, reference.objective_j),
        (true, false) => "canonical placement differs".to_string(),
    };
    InstanceOutcome {
        index,
        passed: objective_ok && servers_ok,
        solver_objective: finite(ours.objective_j),
        oracle_objective: finite(reference.objective_j),
        solver_servers: ours.placement.servers_per_site,
        oracle_servers: reference.placement.servers_per_site,
        detail,
    }
}

pub fn equivalence_check(instances: &[OracleInstance]) -> EquivalenceReport {
    equivalence_check_with(instances, solve)
}

/// Runs `solver` and the oracle on every instance; results keep input order.
pub fn equivalence_check_with<F>(instances: &[OracleInstance], solver: F) -> EquivalenceReport
where
    F: Fn(&MilpModel) -> Result<PlacementSolution, PlacementError> + Sync,
{
    EquivalenceReport {
        outcomes: instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| compare_one(i, inst, &solver))
            .collect(),
    }
}

/// Small instances: 1 to 4 APs, up to 20 patients, varied caps and link shares.
pub fn random_instances(seed: u64, count: usize) -> Vec<OracleInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n_aps = rng.gen_range(1..=4);
            let n_patients = rng.gen_range(1..=20);
            let pat_max = rng.gen_range(1..=n_patients.max(2));
            let mode = if rng.gen_bool(0.5) { Mode::Sfa } else { Mode::Mfa };
            let scenario = ScenarioParams {
                n_patients,
                ..ScenarioParams::with_pat_max(pat_max)
            };
            let r_ps = scenario.ecg_bits / (scenario.t_total - f64::from(pat_max) * scenario.unit_pa_time());
            let downstream = r_ps * rng.gen_range(0.5..12.0);
            let upstream = rng.gen_bool(0.3).then(|| r_ps * rng.gen_range(2.0..15.0));
            let gpon = GponParams {
                n_aps,
                n_patients,
                downstream_hc_override: Some(downstream),
                upstream_hc_override: upstream,
                ..GponParams::default()
            };
            OracleInstance::new(gpon, scenario, mode)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_aps: usize, n_patients: u32, pat_max: u32) -> (Topology, Scenario, DeviceCatalog) {
        let cat = default_catalog();
        let gpon = GponParams {
            n_aps,
            n_patients,
            ..GponParams::default()
        };
        let t = build_gpon(&gpon, &cat).unwrap();
        let sc = Scenario::derive(
            ScenarioParams {
                n_patients,
                ..ScenarioParams::with_pat_max(pat_max)
            },
            analysed_uplink_share(&t, &cat),
        )
        .unwrap();
        (t, sc, cat)
    }

    #[test]
    fn partitions_are_non_increasing() {
        let mut seen = Vec::new();
        partitions(5, 2, 4, &mut Vec::new(), &mut |p| {
            seen.push(p.to_vec());
            true
        });
        assert_eq!(seen, vec![vec![4, 1], vec![3, 2]]);
        let mut n = 0;
        partitions(3, 3, 1, &mut Vec::new(), &mut |_| {
            n += 1;
            true
        });
        assert_eq!(n, 1);
    }

    #[test]
    fn expansion_serves_home_first() {
        let (t, _, _) = small(3, 9, 4);
        let classes = ont_classes(&t, &default_catalog()).unwrap();
        let config = SymmetricConfig {
            k_olt: 1,
            olt_load: 2,
            ont_loads: vec![vec![4, 3]],
        };
        let p = expand(&t, &classes, Mode::Sfa, &config);
        assert_eq!(p.servers_per_site, vec![1, 1, 0, 1]);
        assert_eq!(p.assignment[0], vec![3, 0, 0, 0]);
        assert_eq!(p.assignment[1], vec![0, 3, 0, 0]);
        assert_eq!(p.assignment[2], vec![1, 0, 0, 2]);
    }

    #[test]
    fn hand_checkable_two_ap_instance() {
        // 2 APs with 2 patients each, pat_max 2: either both ONTs, or the OLT
        // plus one ONT; serving at home avoids the OLT raw idle term
        let (t, sc, cat) = small(2, 4, 2);
        let sol = enumerate_optimal(&t, &sc, Mode::Sfa, &cat, &ModelOptions::default()).unwrap();
        assert_eq!(sol.placement.servers_per_site, vec![1, 1, 0]);
        let e = evaluate(&t, &sc, &sol.placement, &cat, &Default::default()).unwrap();
        assert_eq!(e.total_j, sol.objective_j);
    }

    #[test]
    fn infeasible_toy() {
        let (t, sc, cat) = small(2, 40, 1);
        let sol = enumerate_optimal(&t, &sc, Mode::Sfa, &cat, &ModelOptions::default()).unwrap();
        assert_eq!(sol.optimality, Optimality::Infeasible);
        let m = formulate(&t, &sc, Mode::Sfa, &cat, &ModelOptions::default()).unwrap();
        assert_eq!(solve(&m).unwrap().optimality, Optimality::Infeasible);
    }

    #[test]
    fn budget_refusal() {
        let (t, sc, cat) = small(4, 20, 5);
        let tight = OracleBudget {
            max_configs: 3,
            ..OracleBudget::default()
        };
        let r = enumerate_optimal_with(&t, &sc, Mode::Mfa, &cat, &ModelOptions::default(), &tight);
        assert!(matches!(r, Err(OracleError::BudgetExceeded(_))));
        let few_sites = OracleBudget {
            max_sites: 4,
            ..OracleBudget::default()
        };
        let r = enumerate_optimal_with(&t, &sc, Mode::Mfa, &cat, &ModelOptions::default(), &few_sites);
        assert!(matches!(r, Err(OracleError::BudgetExceeded(_))));
    }

    #[test]
    fn empty_instance_list() {
        let r = equivalence_check(&[]);
        assert!(r.outcomes.is_empty());
        assert!(r.all_passed());
        assert!(r.first_failure().is_none());
    }

    #[test]
    fn random_instances_are_reproducible_and_small() {
        let a = random_instances(7, 20);
        assert_eq!(a, random_instances(7, 20));
        assert!(a.iter().all(|i| i.gpon.n_aps <= 4 && i.gpon.n_patients <= 20));
        assert!(a.iter().all(|i| i.build().is_ok()));
    }
}
