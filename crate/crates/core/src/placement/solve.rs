//! Exact solver for the placement MILP.
//!
//! Server vectors are enumerated by total server count, restricted to one
//! canonical representative per symmetry class of interchangeable ONT sites.
//! For a fixed server vector and a fixed on/off pattern of the global
//! activation binaries the remaining problem is a transportation problem on
//! the access tree, solved exactly as a min-cost flow. Site-local idle terms
//! are charged whenever a site hosts a server; a server left without patients
//! is never optimal, so this is exact at the optimum.

use rayon::prelude::*;

use crate::energy::{cloud_instances, evaluate};
use crate::topology::candidate_sites;

use super::model::{MilpModel, Structure};
use super::{
    is_better, link_loads, Mode, Optimality, Placement, PlacementError, PlacementSolution, MinCostFlow,
    REL_TOL,
};

#[derive(Debug, Clone)]
struct Leaf {
    cost: f64,
    servers: Vec<u32>,
    assignment: Vec<Vec<u32>>,
}

/// Groups of ONT sites any two of which can be swapped (together with their
/// access points) without changing costs or capacities.
fn symmetry_classes(st: &Structure) -> Vec<Vec<usize>> {
    let n = st.n_ont;
    let olt = n;
    let swappable = |i: usize, j: usize| -> bool {
        let same = |a: f64, b: f64| a == b;
        if st.patients[i] != st.patients[j]
            || st.home_cap[i] != st.home_cap[j]
            || st.up_cap[i] != st.up_cap[j]
            || st.down_cap[i] != st.down_cap[j]
            || st.site_cap[i] != st.site_cap[j]
            || st.site_max[i] != st.site_max[j]
            || !same(st.site_j[i], st.site_j[j])
        {
            return false;
        }
        let sigma = |k: usize| if k == i { j } else if k == j { i } else { k };
        for a in 0..n {
            for s in 0..=n {
                let (pa, ps) = (sigma(a), if s == olt { olt } else { sigma(s) });
                if !same(st.cost[a][s], st.cost[pa][ps]) {
                    return false;
                }
                if st.touches.iter().any(|t| t[a][s] != t[pa][ps]) {
                    return false;
                }
            }
        }
        true
    };

    let mut classes: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if st.site_max[s] == 0 {
            continue;
        }
        match classes.iter_mut().find(|c| swappable(c[0], s)) {
            Some(c) => c.push(s),
            None => classes.push(vec![s]),
        }
    }
    classes
}

/// Every way to put `k` servers on the ONT classes, as per-class counts.
fn class_counts(sizes: &[usize], k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let j = prefix.len();
    if j == sizes.len() {
        if k == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    let rest: usize = sizes[j + 1..].iter().sum();
    for m in (0..=sizes[j].min(k)).rev() {
        if k - m > rest {
            break;
        }
        prefix.push(m);
        class_counts(sizes, k - m, prefix, out);
        prefix.pop();
    }
}

/// Cheapest assignment for a fixed server vector and global activation pattern.
fn assign(st: &Structure, servers: &[u32], globals_on: &[bool]) -> Option<Leaf> {
    let n_aps = st.patients.len();
    let n_sites = st.sites.len();
    let olt = st.n_ont;
    let allowed = |a: usize, s: usize| {
        servers[s] > 0
            && st
                .touches
                .iter()
                .zip(globals_on)
                .all(|(t, &on)| on || !t[a][s])
    };

    let (src, sink) = (0, 1);
    let ap = |a: usize| 2 + a;
    let up = |a: usize| 2 + n_aps + a;
    let down = |s: usize| 2 + 2 * n_aps + s;
    let site = |s: usize| 2 + 2 * n_aps + st.n_ont + s;
    let mut g = MinCostFlow::new(2 + 2 * n_aps + st.n_ont + n_sites);
    let inf = i64::from(st.n_patients);

    let mut arcs: Vec<(usize, usize, usize)> = Vec::new();
    for a in 0..n_aps {
        if st.patients[a] == 0 {
            continue;
        }
        g.add_arc(src, ap(a), i64::from(st.patients[a].min(st.home_cap[a])), 0.0);
        if allowed(a, a) {
            arcs.push((a, a, g.add_arc(ap(a), site(a), inf, st.cost[a][a])));
        }
        g.add_arc(ap(a), up(a), i64::from(st.up_cap[a]), 0.0);
        if allowed(a, olt) {
            arcs.push((a, olt, g.add_arc(up(a), site(olt), inf, st.cost[a][olt])));
        }
        for s in (0..st.n_ont).filter(|&s| s != a && allowed(a, s)) {
            arcs.push((a, s, g.add_arc(up(a), down(s), inf, st.cost[a][s])));
        }
    }
    for s in 0..n_sites {
        if servers[s] == 0 {
            continue;
        }
        if s < st.n_ont {
            g.add_arc(down(s), site(s), i64::from(st.down_cap[s]), 0.0);
        }
        let cap = u64::from(st.pat_max) * u64::from(servers[s]);
        let cap = cap.min(u64::from(st.site_cap[s])).min(u64::from(st.n_patients));
        g.add_arc(site(s), sink, cap as i64, 0.0);
    }

    let result = g.run(src, sink, inf);
    if result.flow < inf {
        return None;
    }
    let mut assignment = vec![vec![0u32; n_sites]; n_aps];
    for &(a, s, arc) in &arcs {
        assignment[a][s] += g.flow_on(arc) as u32;
    }
    let mut cost = result.cost + st.always_j;
    cost += servers.iter().map(|&y| f64::from(y) * st.server_j).sum::<f64>();
    cost += servers
        .iter()
        .zip(&st.site_j)
        .filter(|(&y, _)| y > 0)
        .map(|(_, &j)| j)
        .sum::<f64>();
    cost += st
        .global_j
        .iter()
        .zip(globals_on)
        .filter(|(_, &on)| on)
        .map(|(&j, _)| j)
        .sum::<f64>();
    Some(Leaf {
        cost,
        servers: servers.to_vec(),
        assignment,
    })
}

fn best_of(leaves: impl IntoIterator<Item = Leaf>) -> Option<Leaf> {
    let mut best: Option<Leaf> = None;
    for leaf in leaves {
        let incumbent = best.as_ref().map(|b| (b.cost, b.servers.as_slice()));
        if is_better(leaf.cost, &leaf.servers, incumbent) {
            best = Some(leaf);
        }
    }
    best
}

fn leaf_for(st: &Structure, servers: &[u32]) -> Option<Leaf> {
    let capacity: u64 = servers
        .iter()
        .zip(&st.site_cap)
        .map(|(&y, &c)| (u64::from(st.pat_max) * u64::from(y)).min(u64::from(c)))
        .sum();
    if capacity < u64::from(st.n_patients) {
        return None;
    }
    let g = st.global_j.len();
    best_of((0..1u32 << g).filter_map(|mask| {
        let on: Vec<bool> = (0..g).map(|i| mask & (1 << i) != 0).collect();
        assign(st, servers, &on)
    }))
}

fn search(st: &Structure) -> Option<Leaf> {
    let olt = st.n_ont;
    if st.n_patients > st.shared_cap {
        return None;
    }
    if st.patients.iter().zip(&st.home_cap).any(|(&p, &c)| p > c) {
        return None;
    }
    let classes = symmetry_classes(st);
    let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    let n_ont_max: usize = sizes.iter().sum();
    let olt_max = st.site_max[olt] as usize;

    let base_lb = st.always_j
        + st
            .patients
            .iter()
            .zip(&st.cost)
            .map(|(&p, row)| f64::from(p) * row.iter().copied().fold(f64::INFINITY, f64::min))
            .sum::<f64>();
    let k_min = st.n_patients.div_ceil(st.pat_max) as usize;

    let mut best: Option<Leaf> = None;
    for k in k_min..=olt_max + n_ont_max {
        if let Some(b) = &best {
            let lb = k as f64 * st.server_j + base_lb;
            if lb > b.cost + REL_TOL * b.cost.abs().max(1.0) {
                break;
            }
        }
        let mut configs = Vec::new();
        for k_olt in (0..=olt_max.min(k)).rev() {
            let mut counts = Vec::new();
            class_counts(&sizes, k - k_olt, &mut Vec::new(), &mut counts);
            for c in counts {
                let mut servers = vec![0u32; st.sites.len()];
                servers[olt] = k_olt as u32;
                for (class, &m) in classes.iter().zip(&c) {
                    for &s in &class[..m] {
                        servers[s] = 1;
                    }
                }
                configs.push(servers);
            }
        }
        let leaves: Vec<Option<Leaf>> = configs.par_iter().map(|y| leaf_for(st, y)).collect();
        let incumbent = best.take();
        best = best_of(incumbent.into_iter().chain(leaves.into_iter().flatten()));
    }
    best
}

/// Constraint family to blame when a model has no feasible placement.
pub fn infeasible_family(model: &MilpModel) -> &'static str {
    let Some(st) = &model.structure else {
        return "none";
    };
    let olt = st.n_ont;
    let deployable: u64 = (0..st.sites.len())
        .map(|s| {
            let servers = model.mode.site_cap(s == olt).map_or(u64::from(st.n_patients), u64::from);
            (servers * u64::from(st.pat_max)).min(u64::from(st.site_cap[s]))
        })
        .sum();
    if deployable < u64::from(st.n_patients) {
        "server_capacity"
    } else {
        "link_capacity"
    }
}

pub fn solve(model: &MilpModel) -> Result<PlacementSolution, PlacementError> {
    let topology = model.topology();
    let scenario = model.scenario();
    let catalog = model.catalog();
    let options = model.options();
    let sites: Vec<String> = candidate_sites(topology)
        .iter()
        .map(|&s| topology.name(s).to_string())
        .collect();

    let Some(st) = &model.structure else {
        let placement = Placement::cloud();
        let energy = evaluate(topology, scenario, &placement, catalog, &options.energy)?;
        return Ok(PlacementSolution {
            pat_max: scenario.pat_max(),
            sites,
            placement,
            cloud_servers: cloud_instances(topology.n_patients(), scenario.pat_max()),
            objective_j: energy.total_j,
            optimality: Optimality::ProvedOptimal,
            link_loads: Vec::new(),
        });
    };

    let Some(leaf) = search(st) else {
        return Ok(PlacementSolution::infeasible(
            model.mode,
            scenario.pat_max(),
            sites,
            topology.aps.len(),
        ));
    };
    let placement = Placement {
        mode: model.mode,
        servers_per_site: leaf.servers,
        assignment: leaf.assignment,
    };
    let objective_j = if options.idle_activation {
        let energy = evaluate(topology, scenario, &placement, catalog, &options.energy)?;
        let tol = REL_TOL * energy.total_j.abs().max(1.0);
        if (energy.total_j - leaf.cost).abs() > tol {
            return Err(PlacementError::Model(format!(
                "search objective {} disagrees with evaluated energy {}",
                leaf.cost, energy.total_j
            )));
        }
        energy.total_j
    } else {
        leaf.cost
    };
    debug_assert!(model.mode != Mode::Ca);
    Ok(PlacementSolution {
        pat_max: scenario.pat_max(),
        link_loads: link_loads(topology, scenario, catalog, &placement)?,
        sites,
        placement,
        cloud_servers: 0,
        objective_j,
        optimality: Optimality::ProvedOptimal,
    })
}
