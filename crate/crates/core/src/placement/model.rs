//! The placement MILP: variables, objective and constraint rows, plus the
//! per-patient cost and capacity tables the exact solver works from.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::catalog::{class, DeviceCatalog};
use crate::energy::{idle_energy, per_patient_energy, EnergyError, Phase};
use crate::scenario::Scenario;
use crate::topology::{candidate_sites, link_hc_capacity, route, LinkId, NodeId, Topology};

use super::{Mode, ModelOptions, PlacementError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Integer,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// Servers at a candidate site (index into the site list).
    Servers { site: usize },
    /// Patients of an AP processed at a site.
    Assign { ap: usize, site: usize },
    /// Whether a device carries traffic in a phase.
    Activation { node: NodeId, phase: Phase },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: Option<f64>,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// When an activation binary is forced to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Activation {
    Never,
    Always,
    /// Exactly when the site serves anyone.
    Site(usize),
    /// Depends on the assignment as a whole.
    Global(usize),
}

/// Everything the solver needs, precomputed from the energy module.
#[derive(Debug, Clone)]
pub(crate) struct Structure {
    pub sites: Vec<NodeId>,
    pub n_ont: usize,
    pub patients: Vec<u32>,
    pub n_patients: u32,
    pub pat_max: u32,
    /// Joules per patient of AP `a` served at site `s`: raw upload, analysed
    /// upload and busy processing time.
    pub cost: Vec<Vec<f64>>,
    pub server_j: f64,
    /// Most servers worth opening per site.
    pub site_max: Vec<u32>,
    /// Patient caps of the raw links AP -> ONT, ONT -> OLT and OLT -> ONT.
    pub home_cap: Vec<u32>,
    pub up_cap: Vec<u32>,
    pub down_cap: Vec<u32>,
    /// Patient cap of the analysed path private to each site.
    pub site_cap: Vec<u32>,
    /// Patient cap of the analysed path every site shares.
    pub shared_cap: u32,
    pub always_j: f64,
    pub site_j: Vec<f64>,
    pub global_j: Vec<f64>,
    /// `touches[g][a][s]`: assignment (a, s) needs global activation `g`.
    pub touches: Vec<Vec<Vec<bool>>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Context {
    pub topology: Topology,
    pub scenario: Scenario,
    pub catalog: DeviceCatalog,
    pub options: ModelOptions,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub mode: Mode,
    pub variables: Vec<Variable>,
    /// Objective coefficient per variable, joules.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Idle energy charged regardless of the decision variables (only when
    /// activation binaries are switched off). Not part of the LP text.
    pub constant_j: f64,
    pub(crate) context: Context,
    pub(crate) structure: Option<Structure>,
}

impl MilpModel {
    pub fn topology(&self) -> &Topology {
        &self.context.topology
    }

    pub fn scenario(&self) -> &Scenario {
        &self.context.scenario
    }

    pub fn catalog(&self) -> &DeviceCatalog {
        &self.context.catalog
    }

    pub fn options(&self) -> &ModelOptions {
        &self.context.options
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }
}

/// Largest patient count whose aggregate rate fits in `capacity`.
fn patient_cap(capacity: f64, rate: f64) -> u32 {
    if rate <= 0.0 {
        return u32::MAX;
    }
    (capacity / rate * (1.0 + 1e-9)).floor().min(f64::from(u32::MAX)) as u32
}

fn path_cap(topology: &Topology, catalog: &DeviceCatalog, links: &[LinkId], rate: f64) -> u32 {
    links
        .iter()
        .map(|&l| patient_cap(link_hc_capacity(topology.link(l), catalog), rate))
        .min()
        .unwrap_or(u32::MAX)
}

fn label(topology: &Topology, node: NodeId) -> String {
    topology.name(node).replace(|c: char| !c.is_ascii_alphanumeric() && c != '_', "_")
}

pub fn formulate(
    topology: &Topology,
    scenario: &Scenario,
    mode: Mode,
    catalog: &DeviceCatalog,
    options: &ModelOptions,
) -> Result<MilpModel, PlacementError> {
    let context = Context {
        topology: topology.clone(),
        scenario: scenario.clone(),
        catalog: catalog.clone(),
        options: *options,
    };
    if mode == Mode::Ca {
        return Ok(MilpModel {
            mode,
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
            constant_j: 0.0,
            context,
            structure: None,
        });
    }

    let sites = candidate_sites(topology);
    let n_sites = sites.len();
    let n_aps = topology.aps.len();
    let olt = n_sites - 1;
    let patients = topology.patients_per_ap.clone();
    let n_patients = topology.n_patients();
    let pat_max = scenario.pat_max();
    let rates = &scenario.rates;
    let (t_t, t_cloud) = (scenario.timing.t_t, rates.t_cloud);

    for (a, (&ap, &ont)) in topology.aps.iter().zip(&topology.onts).enumerate() {
        if topology.parent(ap) != Some(ont) || topology.parent(ont) != Some(topology.olt) {
            return Err(PlacementError::Model(format!(
                "access point {} is not behind ONT_{}",
                topology.name(ap),
                a + 1
            )));
        }
    }

    let server = catalog
        .get(class::PROCESSING_SERVER)
        .ok_or_else(|| EnergyError::UnknownClass(class::PROCESSING_SERVER.into()))?;
    let window = options.energy.server_idle_window.seconds(scenario);
    let server_j = server.idle_share(catalog.hc_share) * server.idle_power() * window;
    let busy_j = server.dynamic_range() * scenario.params.unit_pa_time();

    let raw_paths = (0..n_aps)
        .map(|a| {
            sites
                .iter()
                .map(|&s| route(topology, topology.aps[a], s))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let analysed_paths = sites
        .iter()
        .map(|&s| route(topology, s, topology.storage))
        .collect::<Result<Vec<_>, _>>()?;

    let mut site_analysed = Vec::with_capacity(n_sites);
    for path in &analysed_paths {
        site_analysed.push(per_patient_energy(path, rates.r_cloud, t_cloud, topology, catalog)?);
    }
    let mut cost = vec![vec![0.0; n_sites]; n_aps];
    for a in 0..n_aps {
        for s in 0..n_sites {
            let raw = per_patient_energy(&raw_paths[a][s], rates.r_ps, t_t, topology, catalog)?;
            cost[a][s] = raw + site_analysed[s] + busy_j;
        }
    }

    // variables
    let mut variables = Vec::new();
    let mut objective = Vec::new();
    let y_upper = |s: usize| match mode.site_cap(s == olt) {
        Some(c) => f64::from(c),
        None => f64::from(n_patients.max(1)),
    };
    for (s, &site) in sites.iter().enumerate() {
        variables.push(Variable {
            name: format!("y_{}", label(topology, site)),
            kind: VarKind::Integer,
            lower: 0.0,
            upper: Some(y_upper(s)),
            role: VarRole::Servers { site: s },
        });
        objective.push(server_j);
    }
    let x_index = |a: usize, s: usize| n_sites + a * n_sites + s;
    for a in 0..n_aps {
        for (s, &site) in sites.iter().enumerate() {
            variables.push(Variable {
                name: format!(
                    "x_{}_{}",
                    label(topology, topology.aps[a]),
                    label(topology, site)
                ),
                kind: VarKind::Integer,
                lower: 0.0,
                upper: Some(f64::from(patients[a])),
                role: VarRole::Assign { ap: a, site: s },
            });
            objective.push(cost[a][s]);
        }
    }

    let mut constraints = Vec::new();
    for a in 0..n_aps {
        constraints.push(Constraint {
            name: format!("complete_{}", label(topology, topology.aps[a])),
            terms: (0..n_sites).map(|s| (x_index(a, s), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: f64::from(patients[a]),
        });
    }
    for (s, &site) in sites.iter().enumerate() {
        let mut terms: Vec<_> = (0..n_aps).map(|a| (x_index(a, s), 1.0)).collect();
        terms.push((s, -f64::from(pat_max)));
        constraints.push(Constraint {
            name: format!("servers_{}", label(topology, site)),
            terms,
            sense: Sense::Le,
            rhs: 0.0,
        });
    }

    // which x variables cross each link and each device, per phase
    let mut link_users: BTreeMap<(Phase, LinkId), Vec<usize>> = BTreeMap::new();
    let mut device_users: BTreeMap<(Phase, NodeId), Vec<(usize, usize)>> = BTreeMap::new();
    for a in 0..n_aps {
        for s in 0..n_sites {
            for &l in &raw_paths[a][s].links {
                link_users.entry((Phase::RawUpload, l)).or_default().push(x_index(a, s));
            }
            for &n in &raw_paths[a][s].nodes {
                device_users.entry((Phase::RawUpload, n)).or_default().push((a, s));
            }
            for &l in &analysed_paths[s].links {
                link_users
                    .entry((Phase::AnalysedUpload, l))
                    .or_default()
                    .push(x_index(a, s));
            }
            for &n in &analysed_paths[s].nodes {
                device_users
                    .entry((Phase::AnalysedUpload, n))
                    .or_default()
                    .push((a, s));
            }
        }
    }
    let rate_of = |phase: Phase| match phase {
        Phase::RawUpload => rates.r_ps,
        _ => rates.r_cloud,
    };
    let duration_of = |phase: Phase| match phase {
        Phase::RawUpload => t_t,
        _ => t_cloud,
    };
    for (&(phase, l), users) in &link_users {
        let link = topology.link(l);
        let rate = rate_of(phase);
        constraints.push(Constraint {
            name: format!(
                "link_{}_{}_{}",
                label(topology, link.from),
                label(topology, link.to),
                phase.tag()
            ),
            terms: users.iter().map(|&x| (x, rate)).collect(),
            sense: Sense::Le,
            rhs: link_hc_capacity(link, catalog),
        });
    }

    // activation binaries and their classification
    let column_nonzero = |s: usize| -> Vec<(usize, usize)> {
        (0..n_aps).filter(|&a| patients[a] > 0).map(|a| (a, s)).collect()
    };
    let mut always_j = 0.0;
    let mut site_j = vec![0.0; n_sites];
    let mut global_j = Vec::new();
    let mut touches = Vec::new();
    let mut constant_j = 0.0;
    for (&(phase, node), users) in &device_users {
        let idle = idle_energy(node, duration_of(phase), topology, catalog)?;
        let live: Vec<(usize, usize)> = users.iter().copied().filter(|&(a, _)| patients[a] > 0).collect();
        let activation = if live.is_empty() {
            Activation::Never
        } else if (0..n_aps)
            .any(|a| patients[a] > 0 && (0..n_sites).all(|s| live.contains(&(a, s))))
        {
            Activation::Always
        } else if let Some(s) = (0..n_sites).find(|&s| live == column_nonzero(s)) {
            Activation::Site(s)
        } else {
            Activation::Global(global_j.len())
        };

        if activation == Activation::Never {
            continue;
        }
        let z = variables.len();
        variables.push(Variable {
            name: format!("z_{}_{}", label(topology, node), phase.tag()),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: Some(1.0),
            role: VarRole::Activation { node, phase },
        });
        let rate = rate_of(phase);
        let mut terms: Vec<_> = users.iter().map(|&(a, s)| (x_index(a, s), rate)).collect();
        terms.push((z, -rate * f64::from(n_patients)));
        constraints.push(Constraint {
            name: format!("active_{}_{}", label(topology, node), phase.tag()),
            terms,
            sense: Sense::Le,
            rhs: 0.0,
        });

        if !options.idle_activation {
            objective.push(0.0);
            constant_j += idle;
            always_j += idle;
            continue;
        }
        objective.push(idle);
        match activation {
            Activation::Always => always_j += idle,
            Activation::Site(s) => site_j[s] += idle,
            Activation::Global(_) => {
                global_j.push(idle);
                let mut t = vec![vec![false; n_sites]; n_aps];
                for &(a, s) in &live {
                    t[a][s] = true;
                }
                touches.push(t);
            }
            Activation::Never => unreachable!(),
        }
    }

    let cap_of = |links: &[LinkId], rate: f64| path_cap(topology, catalog, links, rate);
    let home_cap = (0..n_aps).map(|a| cap_of(&raw_paths[a][a].links, rates.r_ps)).collect();
    let up_cap = (0..n_aps)
        .map(|a| cap_of(&route(topology, topology.onts[a], topology.olt).map(|p| p.links).unwrap_or_default(), rates.r_ps))
        .collect();
    let mut down_cap = Vec::with_capacity(n_sites - 1);
    for &ont in &topology.onts {
        down_cap.push(cap_of(&route(topology, topology.olt, ont)?.links, rates.r_ps));
    }
    let shared_links = &analysed_paths[olt].links;
    let site_cap = analysed_paths
        .iter()
        .map(|p| {
            let private: Vec<LinkId> = p.links.iter().copied().filter(|l| !shared_links.contains(l)).collect();
            cap_of(&private, rates.r_cloud)
        })
        .collect();
    let shared_cap = cap_of(shared_links, rates.r_cloud);

    let needed = n_patients.div_ceil(pat_max);
    let site_max = (0..n_sites)
        .map(|s| mode.site_cap(s == olt).map_or(needed, |c| c.min(needed)))
        .collect();

    Ok(MilpModel {
        mode,
        variables,
        objective,
        constraints,
        constant_j,
        context,
        structure: Some(Structure {
            sites,
            n_ont: n_sites - 1,
            patients,
            n_patients,
            pat_max,
            cost,
            server_j,
            site_max,
            home_cap,
            up_cap,
            down_cap,
            site_cap,
            shared_cap,
            always_j,
            site_j,
            global_j,
            touches,
        }),
    })
}

fn push_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    for (i, (coef, name)) in terms.enumerate() {
        if i > 0 && i % 6 == 0 {
            out.push_str("\n   ");
        }
        if first {
            if coef < 0.0 {
                let _ = write!(out, " - {} {}", -coef, name);
            } else {
                let _ = write!(out, " {coef} {name}");
            }
            first = false;
        } else if coef < 0.0 {
            let _ = write!(out, " - {} {}", -coef, name);
        } else {
            let _ = write!(out, " + {coef} {name}");
        }
    }
    if first {
        out.push_str(" 0");
    }
}

/// The model in CPLEX LP text form. The constant idle term is left out.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ fogplace {} pat_max={}", model.mode, model.scenario().pat_max());
    out.push_str("Minimize\n obj:");
    push_terms(
        &mut out,
        model
            .variables
            .iter()
            .zip(&model.objective)
            .filter(|(_, &c)| c != 0.0)
            .map(|(v, &c)| (c, v.name.clone())),
    );
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        push_terms(
            &mut out,
            c.terms.iter().map(|&(i, coef)| (coef, model.variables[i].name.clone())),
        );
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Integer) {
        match v.upper {
            Some(u) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, u);
            }
            None => {
                let _ = writeln!(out, " {} >= {}", v.name, v.lower);
            }
        }
    }
    out.push_str("Generals\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Integer) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("Binaries\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}
