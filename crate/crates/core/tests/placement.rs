use fogplace_core::catalog::default_catalog;
use fogplace_core::energy::{evaluate, EnergyOptions, Phase};
use fogplace_core::placement::{
    check_feasibility, export_lp, formulate, solve, Mode, ModelOptions, Optimality, Placement, PlacementSolution,
    VarRole,
};
use fogplace_core::scenario::{Scenario, ScenarioParams};
use fogplace_core::topology::{analysed_uplink_share, build_gpon, candidate_sites, route, GponParams, Topology};
use fogplace_core::DeviceCatalog;

fn setup(pat_max: u32) -> (Topology, Scenario, DeviceCatalog) {
    let cat = default_catalog();
    let t = build_gpon(&GponParams::default(), &cat).unwrap();
    let s = Scenario::derive(ScenarioParams::with_pat_max(pat_max), analysed_uplink_share(&t, &cat)).unwrap();
    (t, s, cat)
}

fn run(pat_max: u32, mode: Mode) -> PlacementSolution {
    let (t, s, cat) = setup(pat_max);
    solve(&formulate(&t, &s, mode, &cat, &ModelOptions::default()).unwrap()).unwrap()
}

#[test]
fn every_fog_solution_uses_the_olt() {
    for pat_max in [50, 100, 150, 200] {
        let sol = run(pat_max, Mode::Sfa);
        assert_eq!(sol.optimality, Optimality::ProvedOptimal);
        assert_eq!(sol.servers_at("OLT"), 1, "pat_max {pat_max}");
    }
}

#[test]
fn onts_used_shrink_as_the_cap_grows() {
    let onts = |pat_max| run(pat_max, Mode::Sfa).servers_total() - 1;
    let counts: Vec<u32> = [50, 100, 150, 200].into_iter().map(onts).collect();
    assert_eq!(counts, vec![3, 2, 1, 0]);
}

#[test]
fn all_at_olt_objective_matches_evaluation() {
    let (t, s, cat) = setup(200);
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
        mode: Mode::Sfa,
        servers_per_site: servers,
        assignment,
    };
    let model = formulate(&t, &s, Mode::Sfa, &cat, &ModelOptions::default()).unwrap();
    let e = evaluate(&t, &s, &placement, &cat, &EnergyOptions::default()).unwrap();

    // objective of the model at this point: y, x and the binaries it switches on
    let mut value = 0.0;
    for (v, &c) in model.variables.iter().zip(&model.objective) {
        let x = match v.role {
            VarRole::Servers { site } => f64::from(placement.servers_per_site[site]),
            VarRole::Assign { ap, site } => f64::from(placement.assignment[ap][site]),
            VarRole::Activation { node, phase } => {
                let on = placement.assignment.iter().enumerate().any(|(a, row)| {
                    row.iter().enumerate().any(|(st, &n)| {
                        let path = match phase {
                            Phase::RawUpload => route(&t, t.aps[a], sites[st]).unwrap(),
                            _ => route(&t, sites[st], t.storage).unwrap(),
                        };
                        n > 0 && path.nodes.contains(&node)
                    })
                });
                f64::from(u8::from(on))
            }
        };
        value += c * x;
    }
    assert!((value - e.total_j).abs() <= 1e-9 * e.total_j, "{value} vs {}", e.total_j);
    let sol = solve(&model).unwrap();
    assert_eq!(sol.placement, placement);
    assert!((sol.objective_j - e.total_j).abs() <= 1e-9 * e.total_j);
}

#[test]
fn solutions_are_deterministic() {
    for mode in Mode::ALL {
        let a = serde_json::to_string(&run(100, mode)).unwrap();
        let b = serde_json::to_string(&run(100, mode)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn solution_json_fields() {
    let v: serde_json::Value = serde_json::to_value(run(100, Mode::Mfa)).unwrap();
    for key in ["mode", "pat_max", "servers_per_site", "assignment", "objective_j", "optimality"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["mode"], "MFA");
    assert_eq!(v["servers_per_site"]["OLT"], 2);
    assert_eq!(v["assignment"]["AP_1"]["OLT"], 7);
    assert_eq!(v["optimality"], "ProvedOptimal");
}

#[test]
fn single_site_takes_everyone() {
    let cat = default_catalog();
    let gpon = GponParams {
        n_aps: 1,
        n_patients: 30,
        ..GponParams::default()
    };
    let t = build_gpon(&gpon, &cat).unwrap();
    let s = Scenario::derive(ScenarioParams::with_pat_max(30), analysed_uplink_share(&t, &cat)).unwrap();
    let sol = solve(&formulate(&t, &s, Mode::Sfa, &cat, &ModelOptions::default()).unwrap()).unwrap();
    assert_eq!(sol.servers_total(), 1);
    assert_eq!(sol.site_patients().iter().sum::<u32>(), 30);
    assert!(check_feasibility(&t, &s, &cat, &sol.placement).is_empty());
}

#[test]
fn too_few_sites_is_infeasible() {
    let cat = default_catalog();
    let gpon = GponParams {
        n_aps: 2,
        n_patients: 40,
        ..GponParams::default()
    };
    let t = build_gpon(&gpon, &cat).unwrap();
    let s = Scenario::derive(ScenarioParams::with_pat_max(1), analysed_uplink_share(&t, &cat)).unwrap();
    let sol = solve(&formulate(&t, &s, Mode::Sfa, &cat, &ModelOptions::default()).unwrap()).unwrap();
    assert_eq!(sol.optimality, Optimality::Infeasible);
    assert!(serde_json::to_value(&sol).unwrap()["objective_j"].is_null());
}

#[test]
fn lp_export_covers_every_variable() {
    let (t, s, cat) = setup(50);
    let model = formulate(&t, &s, Mode::Sfa, &cat, &ModelOptions::default()).unwrap();
    let lp = export_lp(&model);
    for v in &model.variables {
        let declared = lp
            .lines()
            .filter(|l| l.trim() == v.name)
            .count();
        assert_eq!(declared, 1, "{}", v.name);
    }
    assert_eq!(lp.matches("\nMinimize\n").count(), 1);
    assert!(lp.ends_with("End\n"));
}

#[test]
fn unconditional_idle_keeps_placements_and_adds_a_constant() {
    let (t, s, cat) = setup(100);
    let off = ModelOptions {
        idle_activation: false,
        ..ModelOptions::default()
    };
    for mode in [Mode::Sfa, Mode::Mfa] {
        let with = solve(&formulate(&t, &s, mode, &cat, &ModelOptions::default()).unwrap()).unwrap();
        let model = formulate(&t, &s, mode, &cat, &off).unwrap();
        assert!(model.constant_j > 0.0);
        let without = solve(&model).unwrap();
        assert!(check_feasibility(&t, &s, &cat, &without.placement).is_empty());
        assert!(without.objective_j >= with.objective_j);
        assert_eq!(without.servers_total(), with.servers_total());
    }
}
