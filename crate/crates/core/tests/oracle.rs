use fogplace_core::catalog::default_catalog;
use fogplace_core::energy::{evaluate, EnergyOptions};
use fogplace_core::oracle::{enumerate_optimal, equivalence_check, equivalence_check_with, random_instances};
use fogplace_core::placement::{check_feasibility, formulate, solve, Mode, ModelOptions, Placement};
use fogplace_core::scenario::{Scenario, ScenarioParams};
use fogplace_core::topology::{analysed_uplink_share, build_gpon, GponParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn solver_matches_oracle_on_random_instances() {
    let report = equivalence_check(&random_instances(20_240_601, 60));
    assert_eq!(report.outcomes.len(), 60);
    assert!(report.all_passed(), "{:?}", report.first_failure());
}

#[test]
fn perturbed_solver_is_localised() {
    let instances = random_instances(3, 12);
    let bad = 5;
    let target = instances[bad].clone();
    let report = equivalence_check_with(&instances, |model| {
        let mut sol = solve(model)?;
        let same = model.topology().n_patients() == target.gpon.n_patients
            && model.topology().aps.len() == target.gpon.n_aps
            && model.scenario().params == target.scenario
            && model.mode == target.mode;
        if same {
            sol.objective_j *= 1.001;
        }
        Ok(sol)
    });
    let first = report.first_failure().expect("perturbation detected");
    assert!(first.index <= bad);
    assert_eq!(report.outcomes[bad].passed, false);
}

#[test]
fn oracle_agrees_on_default_s4() {
    let cat = default_catalog();
    let t = build_gpon(&GponParams::default(), &cat).unwrap();
    let s = Scenario::derive(ScenarioParams::with_pat_max(200), analysed_uplink_share(&t, &cat)).unwrap();
    for mode in [Mode::Sfa, Mode::Mfa] {
        let oracle = enumerate_optimal(&t, &s, mode, &cat, &ModelOptions::default()).unwrap();
        let solver = solve(&formulate(&t, &s, mode, &cat, &ModelOptions::default()).unwrap()).unwrap();
        assert_eq!(oracle.placement.servers_per_site, solver.placement.servers_per_site);
        assert!((oracle.objective_j - solver.objective_j).abs() <= 1e-9 * solver.objective_j);
    }
}

/// Random feasible placement: open sites at random, then place patients one
/// by one on a random open site with room.
fn random_placement(rng: &mut ChaCha8Rng, patients: &[u32], pat_max: u32, mode: Mode) -> Placement {
    let n_sites = patients.len() + 1;
    let olt = n_sites - 1;
    let mut servers = vec![0u32; n_sites];
    for s in 0..olt {
        servers[s] = u32::from(rng.gen_bool(0.5));
    }
    servers[olt] = match mode {
        Mode::Mfa => rng.gen_range(0..=3),
        _ => u32::from(rng.gen_bool(0.5)),
    };
    let mut room: Vec<u32> = servers.iter().map(|&y| y * pat_max).collect();
    let mut assignment = vec![vec![0u32; n_sites]; patients.len()];
    for (a, &p) in patients.iter().enumerate() {
        for _ in 0..p {
            let open: Vec<usize> = (0..n_sites).filter(|&s| room[s] > 0).collect();
            if open.is_empty() {
                break;
            }
            let s = open[rng.gen_range(0..open.len())];
            room[s] -= 1;
            assignment[a][s] += 1;
        }
    }
    Placement {
        mode,
        servers_per_site: servers,
        assignment,
    }
}

#[test]
fn oracle_beats_random_feasible_placements() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for inst in random_instances(99, 15) {
        let (t, s) = inst.build().unwrap();
        let best = enumerate_optimal(&t, &s, inst.mode, &inst.catalog, &inst.options).unwrap();
        let mut checked = 0;
        for _ in 0..100 {
            let p = random_placement(&mut rng, &t.patients_per_ap, s.pat_max(), inst.mode);
            if !check_feasibility(&t, &s, &inst.catalog, &p).is_empty() {
                continue;
            }
            let e = evaluate(&t, &s, &p, &inst.catalog, &EnergyOptions::default()).unwrap();
            assert!(best.objective_j <= e.total_j * (1.0 + 1e-9), "{inst:?}");
            checked += 1;
        }
        let _ = checked;
    }
}

#[test]
fn oracle_is_deterministic() {
    let inst = &random_instances(5, 1)[0];
    let (t, s) = inst.build().unwrap();
    let a = enumerate_optimal(&t, &s, inst.mode, &inst.catalog, &inst.options).unwrap();
    let b = enumerate_optimal(&t, &s, inst.mode, &inst.catalog, &inst.options).unwrap();
    assert_eq!(a, b);
}
