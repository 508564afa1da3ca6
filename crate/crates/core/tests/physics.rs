use desnet::formulation::{build_formulation, evaluate_residuals};
use desnet::instance::samples::table_one_arc;
use desnet::instance::{generate_instance, GeneratorSpec, Instance, ModelOptions, Tech, Topology};
use desnet::physics::*;
use desnet::plan::{ArcDecision, PlanDecisions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> PhysicsOptions {
    PhysicsOptions::default()
}

/// High-potential root of `u² − u_0·u + R·s/a_e = 0`, the one-cable balance.
fn one_cable_potential(u0: f64, r: f64, a_e: f64, s: f64) -> Option<f64> {
    let disc = u0 * u0 - 4.0 * r * s / a_e;
    (disc >= 0.0).then(|| 0.5 * (u0 + disc.sqrt()))
}

#[test]
fn zero_demand_keeps_source_potential() {
    let inst = table_one_arc();
    let e = solve_electric_with(&inst, &[1.0], &[0.0, 0.0], &opts()).unwrap();
    assert_eq!(e.u, vec![400.0, 400.0]);
    assert_eq!(e.f_in, vec![0.0]);
    assert_eq!(e.f_out, vec![0.0]);
}

#[test]
fn one_cable_against_closed_form() {
    let inst = table_one_arc();
    let e = solve_electric_with(&inst, &[1.0], &[0.0, 3900.0], &opts()).unwrap();
    let oracle = one_cable_potential(400.0, 1.0, 1.0, 3900.0).unwrap();
    assert!((e.u[1] - oracle).abs() < 1e-6);
    assert!((e.u[1] - 390.0).abs() < 1e-6);
    assert!((e.f_in[0] - 3900.0).abs() < 1e-6);
    assert!((e.f_out[0] - 4000.0).abs() < 1e-6);
    assert!((e.f_out[0] - e.f_in[0] - 100.0).abs() < 1e-6);
}

#[test]
fn overloaded_cable_is_electric_infeasibility() {
    let inst = table_one_arc();
    assert!(one_cable_potential(400.0, 1.0, 1.0, 50000.0).is_none());
    let err = solve_electric_with(&inst, &[1.0], &[0.0, 50000.0], &opts()).unwrap_err();
    assert!(matches!(err, PhysicsError::ElectricInfeasible(_)));
    assert!(err.to_string().contains("electric infeasibility"));
}

#[test]
fn one_pipe_pressure_loss() {
    let mut inst = table_one_arc();
    let g = solve_gas_with(&inst, &[Some(0.1)], &[0.0, 20.0], &opts()).unwrap();
    assert!((g.p[0] - g.p[1] - 40.0).abs() < 1e-6);
    assert!((g.p[1] - 20.0).abs() < 1e-6);
    assert!((g.f[0] - 20.0).abs() < 1e-9);
    assert!((g.q_bar[0] - 20.0).abs() < 1e-9);

    // Same flow with p_min = 30 is operable only down to 30 mbar.
    inst.physical.p_min = 30.0;
    inst.arcs[0].r_g = Some(0.1);
    let mut d = PlanDecisions::uniform(&inst, Tech::Cb);
    d.arcs[0].pipe = true;
    // CB peak 52.9 halves onto both nodes; scale so the far node takes 20.
    {
        let t = &mut inst.arcs[0].demand.cb;
        t.mgl = 40.0;
    }
    let rep = check_feasibility(&inst, &d, &opts());
    assert_eq!(rep.low_pressure.len(), 1, "{:?}", rep.problems());
    assert_eq!(rep.low_pressure[0].node, 1);
    assert!((rep.low_pressure[0].value - 20.0).abs() < 1e-6);
}

#[test]
fn all_heat_pumps_need_no_gas() {
    let inst = table_one_arc();
    let d = PlanDecisions::uniform(&inst, Tech::Hp);
    let s = simulate(&inst, &d, &opts()).unwrap();
    assert_eq!(s.p, vec![inst.physical.p_max; 2]);
    assert_eq!(s.f_g, vec![0.0]);
    assert!(s.peaks.gas.iter().all(|&g| g == 0.0));
}

#[test]
fn node_peaks_halve_arc_peaks() {
    let inst = table_one_arc();
    let (_, peaks) = node_peaks(&inst, &PlanDecisions::uniform(&inst, Tech::Cb));
    assert_eq!(peaks.gas, vec![26.45, 26.45]);
    let mut d = PlanDecisions::uniform(&inst, Tech::Cb);
    d.arcs[0].reno1 = 1.0;
    let (loads, peaks) = node_peaks(&inst, &d);
    assert!((loads[0].gmax - 37.03).abs() < 1e-12);
    assert!((peaks.gas[1] - 18.515).abs() < 1e-12);
}

#[test]
fn feasibility_report_names_problems() {
    let mut inst = table_one_arc();
    // A 52.9 kW peak over R_g = 0.1 loses 70 mbar, so leave room for it.
    inst.physical.p_max = 100.0;
    let rep = check_feasibility(&inst, &PlanDecisions::uniform(&inst, Tech::Cb), &opts());
    assert!(rep.is_feasible(), "{:?}", rep.problems());

    let mut tight = inst.clone();
    tight.physical.u_min = 395.0;
    tight.arcs[0].demand.cb.mel = 7800.0;
    let rep = check_feasibility(&tight, &PlanDecisions::uniform(&tight, Tech::Cb), &opts());
    assert!(!rep.is_feasible());
    assert_eq!(rep.low_voltage[0].node, 1);
    assert!((rep.low_voltage[0].value - 390.0).abs() < 1e-6);

    let mut unlinked = PlanDecisions::uniform(&inst, Tech::Cb);
    unlinked.arcs[0].pipe = false;
    let rep = check_feasibility(&inst, &unlinked, &opts());
    assert!(rep.decisions.as_deref().unwrap().contains("pipe linkage"));
    assert!(rep.state.is_none());
}

#[test]
fn gas_demand_behind_missing_pipe() {
    let inst = generate_instance(&GeneratorSpec::new(12, Topology::Tree, 1)).unwrap();
    let mut d = PlanDecisions::uniform(&inst, Tech::Hp);
    let far = (0..inst.arc_count()).find(|&k| inst.endpoints(k).0 != 0 && inst.demand(k).has_heat()).unwrap();
    d.arcs[far] = ArcDecision { tech: Some(Tech::Cb), pipe: true, ..Default::default() };
    let err = simulate(&inst, &d, &opts()).unwrap_err();
    assert!(matches!(err, PhysicsError::DisconnectedGas { .. }), "{err}");
}

fn mixed_plan(inst: &Instance, pattern: u64) -> PlanDecisions {
    let mut d = PlanDecisions::uniform(inst, Tech::Hp);
    let parents = inst.network.parent_arcs();
    let mut rng = ChaCha8Rng::seed_from_u64(pattern);
    for k in inst.heat_arcs().collect::<Vec<_>>() {
        let t = Tech::ALL[rng.gen_range(0..3)];
        d.arcs[k].tech = Some(t);
        d.arcs[k].reno1 = if rng.gen() { 0.5 } else { 0.0 };
        if t.uses_gas() {
            // Pipes along the whole path back to the source.
            let (i, j) = inst.endpoints(k);
            for node in [i, j] {
                for a in inst.network.path_to_source(&parents, node) {
                    d.arcs[a].pipe = true;
                }
            }
            d.arcs[k].pipe = true;
        }
    }
    d
}

fn check_state(inst: &Instance, d: &PlanDecisions, s: &FlowState) {
    assert!(s.electric_residual <= 1e-8 && s.gas_residual <= 1e-8);
    for k in 0..inst.arc_count() {
        assert!(s.f_e_out[k] >= s.f_e_in[k] - 1e-12);
        let (i, j) = inst.endpoints(k);
        let dp = s.p[i] - s.p[j];
        if s.f_g[k].abs() > 1e-9 {
            assert_eq!(s.f_g[k] > 0.0, dp > 0.0);
        }
        if !d.arcs[k].pipe {
            assert_eq!(s.f_g[k], 0.0);
        }
    }
    let peaks_e: f64 = s.peaks.electric.iter().sum();
    let source = s.source_electric_peak(inst);
    assert!((source - peaks_e - s.electric_losses()).abs() <= 1e-7 * source.max(1.0));
    let peaks_g: f64 = s.peaks.gas.iter().sum();
    assert!((s.source_gas_peak(inst) - peaks_g).abs() <= 1e-7 * peaks_g.max(1.0));
}

#[test]
fn generated_states_satisfy_the_formulation() {
    // Rows that only encode operating ranges; an inoperable plan breaks them.
    let range_tags = ["voltbounds", "gpbounds", "refgflow", "pbarref", "DWfinal", "builgaspiperel"];
    let mut operable_plans = 0;
    for (n, topology, seed) in [
        (3, Topology::Tree, 1),
        (6, Topology::Tree, 2),
        (9, Topology::Ring, 3),
        (9, Topology::Grid, 4),
        (50, Topology::Tree, 5),
    ] {
        let inst = generate_instance(&GeneratorSpec::new(n, topology, seed)).unwrap();
        let f = build_formulation(&inst, ModelOptions::default()).unwrap();
        for pattern in [0u64, 1, 2, 3, 4, 5] {
            let d = mixed_plan(&inst, pattern);
            let s = simulate(&inst, &d, &opts()).unwrap_or_else(|e| panic!("{n} {topology:?} {pattern}: {e}"));
            check_state(&inst, &d, &s);
            let pt = plan_point(&f, &inst, &d, &s);
            let rep = evaluate_residuals(&f, &pt, 1e-7).unwrap();
            assert!(rep.integrality.is_empty());
            if check_feasibility(&inst, &d, &opts()).is_feasible() {
                operable_plans += 1;
                assert!(rep.is_empty(), "{n} {topology:?} {pattern}: {rep}");
            } else {
                let broken: Vec<_> = rep.rows.iter().filter(|r| !range_tags.contains(&r.tag.as_str())).collect();
                assert!(broken.is_empty(), "{n} {topology:?} {pattern}: {broken:?}");
            }
        }
    }
    assert!(operable_plans >= 10, "{operable_plans}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_cable_matches_closed_form(s in 0.0f64..39_000.0, r in 0.5f64..2.0) {
        let inst = table_one_arc();
        let e = solve_electric_with(&inst, &[r], &[0.0, s / r * 1.0], &opts());
        // Load scaled with 1/R keeps the discriminant positive.
        let oracle = one_cable_potential(400.0, r, 1.0, s / r).unwrap();
        let e = e.unwrap();
        prop_assert!((e.u[1] - oracle).abs() < 1e-6);
    }

    #[test]
    fn one_pipe_matches_closed_form(s in 0.0f64..20.0, r in 0.01f64..0.1) {
        let inst = table_one_arc();
        let g = solve_gas_with(&inst, &[Some(r)], &[0.0, s], &opts()).unwrap();
        prop_assert!((g.p[0] - g.p[1] - r * s * s).abs() < 1e-6);
    }
}
