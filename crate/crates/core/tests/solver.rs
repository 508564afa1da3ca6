use desnet::costing::{emission_floor, plan_costs};
use desnet::formulation::{build_formulation, evaluate_residuals};
use desnet::instance::samples::table_one_arc;
use desnet::instance::{generate_instance, GeneratorSpec, Instance, ModelOptions, Tech, Topology};
use desnet::physics::{check_feasibility, PhysicsOptions};
use desnet::plan::PlanDecisions;
use desnet::solver::*;

fn grid_config() -> SolveConfig {
    SolveConfig { renovation_grid: Some(vec![0.0, 1.0]), ..SolveConfig::default() }
}

fn tree(nodes: usize, seed: u64) -> Instance {
    generate_instance(&GeneratorSpec::new(nodes, Topology::Tree, seed)).unwrap()
}

/// One-arc table instance with enough gas pressure for a boiler.
fn roomy_one_arc() -> Instance {
    let mut inst = table_one_arc();
    inst.physical.p_max = 100.0;
    inst
}

#[test]
fn small_trees_match_the_oracle() {
    for seed in 0..3u64 {
        let inst = tree(3 + seed as usize, seed);
        let oracle = enumerate_exact(&inst, ModelOptions::default(), &[0.0, 1.0]).unwrap();
        let best = oracle.best.as_ref().unwrap();
        let res = solve(&inst, ModelOptions::default(), &grid_config()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        let obj = res.objective.unwrap();
        assert!(
            (obj - best.objective).abs() <= 1e-6 * best.objective.abs(),
            "seed {seed}: {obj} vs {}",
            best.objective
        );
        assert!(res.lower_bound <= obj + 1e-9 * obj.abs());
        assert!(res.gap.unwrap() <= 1e-6);
    }
}

#[test]
fn one_arc_picks_the_cheapest_technology() {
    let mut inst = roomy_one_arc();
    // Expensive cogeneration units and heat pumps leave the boiler.
    inst.costs.gamma = [600.0, 1e5, 1e5];
    let res = solve(&inst, ModelOptions::default(), &SolveConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    let d = res.decisions.as_ref().unwrap();
    assert_eq!(d.arcs[0].tech, Some(Tech::Cb));
    let costs = plan_costs(&inst, ModelOptions::default(), d, res.flow.as_ref().unwrap());
    assert!((costs.total - res.objective.unwrap()).abs() < 1e-9 * costs.total);
}

#[test]
fn zero_emission_target_is_emission_infeasible() {
    let mut inst = roomy_one_arc();
    inst.costs.e_target = 0.0;
    let res = solve(&inst, ModelOptions::default(), &SolveConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::EmissionInfeasible);
    assert!(res.objective.is_none());
    assert_eq!(res.nodes, 0);

    // The infinite bound survives a JSON round trip.
    let text = serde_json::to_string(&res).unwrap();
    assert!(text.contains("\"lower_bound\":\"inf\""), "{text}");
    let back: SolveResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back.lower_bound, f64::INFINITY);
    assert!(serde_json::from_str::<SolveResult>(&text.replace("\"inf\"", "\"huge\"")).is_err());
}

#[test]
fn incumbent_is_exact() {
    let inst = tree(5, 11);
    let res = solve(&inst, ModelOptions::default(), &SolveConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    let f = build_formulation(&inst, ModelOptions::default()).unwrap();
    let rep = evaluate_residuals(&f, res.point.as_ref().unwrap(), 1e-6).unwrap();
    assert!(rep.is_empty(), "{rep:?}");
    assert!(check_feasibility(&inst, res.decisions.as_ref().unwrap(), &PhysicsOptions::default()).is_feasible());
    assert!(res.costs.unwrap().emission <= inst.costs.e_target);
}

#[test]
fn single_thread_is_deterministic() {
    let inst = tree(5, 4);
    let a = solve(&inst, ModelOptions::default(), &SolveConfig::default()).unwrap();
    let b = solve(&inst, ModelOptions::default(), &SolveConfig::default()).unwrap();
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.lp_iterations, b.lp_iterations);
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.decisions, b.decisions);
}

#[test]
fn threads_agree_with_single_thread() {
    let inst = tree(5, 4);
    let one = solve(&inst, ModelOptions::default(), &SolveConfig::default()).unwrap();
    let four = solve(&inst, ModelOptions::default(), &SolveConfig { threads: 4, ..SolveConfig::default() }).unwrap();
    assert_eq!(four.status, SolveStatus::Optimal);
    let (a, b) = (one.objective.unwrap(), four.objective.unwrap());
    assert!((a - b).abs() <= 2e-6 * a.abs(), "{a} vs {b}");
}

#[test]
fn node_limit_stops_the_search() {
    let inst = tree(5, 2);
    let cfg = SolveConfig { node_limit: 1, tangent_rounds: 0, ..SolveConfig::default() };
    let res = solve(&inst, ModelOptions::default(), &cfg).unwrap();
    assert_eq!(res.limit, Some(Limit::Nodes));
    assert_eq!(res.nodes, 1);
    assert!(matches!(res.status, SolveStatus::Feasible | SolveStatus::NodeLimit));
    if let Some(obj) = res.objective {
        assert!(res.lower_bound <= obj);
        assert!(res.gap.unwrap() > 1e-6);
    }
}

#[test]
fn config_is_checked() {
    let inst = roomy_one_arc();
    for cfg in [
        SolveConfig { threads: 0, ..SolveConfig::default() },
        SolveConfig { gap_tol: -1.0, ..SolveConfig::default() },
        SolveConfig { renovation_grid: Some(vec![0.5, 1.0]), ..SolveConfig::default() },
    ] {
        assert!(matches!(solve(&inst, ModelOptions::default(), &cfg), Err(SolveError::Config(_))));
    }
}

#[test]
fn result_round_trips_through_json() {
    let res = solve(&roomy_one_arc(), ModelOptions::default(), &SolveConfig::default()).unwrap();
    let text = serde_json::to_string(&res).unwrap();
    assert!(text.contains("\"status\":\"optimal\""));
    let back: SolveResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back.objective, res.objective);
    assert_eq!(back.decisions, res.decisions);
    let status: SolveStatus = serde_json::from_str("\"emission-infeasible\"").unwrap();
    assert_eq!(status, SolveStatus::EmissionInfeasible);
}

#[test]
fn oracle_counts_one_arc_profiles() {
    let rep = enumerate_exact(&roomy_one_arc(), ModelOptions::default(), &[0.0, 1.0]).unwrap();
    assert_eq!(rep.candidates, 9);
    let rep = enumerate_exact(&roomy_one_arc(), ModelOptions::default(), &[0.0, 0.5, 1.0]).unwrap();
    // (0,0) (½,0) (1,0) (1,½) (1,1) per technology.
    assert_eq!(rep.candidates, 15);
}

#[test]
fn oracle_picks_heat_pumps_under_a_tight_cap() {
    let mut inst = roomy_one_arc();
    inst.costs.kappa_g = 10.0;
    inst.costs.e_target = emission_floor(&inst) * 1.01;
    let hp = PlanDecisions::uniform(&inst, Tech::Hp);
    assert!(check_feasibility(&inst, &hp, &PhysicsOptions::default()).is_feasible());
    let rep = enumerate_exact(&inst, ModelOptions::default(), &[0.0, 1.0]).unwrap();
    let best = rep.best.as_ref().unwrap();
    assert_eq!(best.decisions.arcs[0].tech, Some(Tech::Hp));
    let res = rep.into_result();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert_eq!(res.gap, Some(0.0));
}

#[test]
fn oracle_without_heat_costs_nothing_to_build() {
    let mut inst = roomy_one_arc();
    let d = &mut inst.arcs[0].demand;
    d.shl = 0.0;
    d.mhl = 0.0;
    for t in [&mut d.cb, &mut d.chp, &mut d.hp] {
        t.sgl = 0.0;
        t.mgl = 0.0;
        t.sel = d.sel;
        t.mel = d.mel;
    }
    let rep = enumerate_exact(&inst, ModelOptions::default(), &[0.0, 1.0]).unwrap();
    assert_eq!(rep.candidates, 1);
    let c = rep.best.unwrap().costs;
    assert_eq!(c.tech, 0.0);
    assert_eq!(c.renovation, 0.0);
}

#[test]
fn oracle_guards() {
    let ring = generate_instance(&GeneratorSpec::new(4, Topology::Ring, 1)).unwrap();
    assert_eq!(enumerate_exact(&ring, ModelOptions::default(), &[0.0, 1.0]).unwrap_err(), OracleError::NotTree);
    let big = tree(12, 1);
    assert!(matches!(enumerate_exact(&big, ModelOptions::default(), &[0.0, 1.0]), Err(OracleError::TooLarge { .. })));
}

#[test]
fn rounding_a_boiler_point() {
    let inst = roomy_one_arc();
    let f = build_formulation(&inst, ModelOptions::default()).unwrap();
    let mut x: Vec<f64> = f.catalog.vars().iter().map(|v| v.lb).collect();
    use desnet::formulation::VarKey;
    x[f.id(VarKey::Tech(0, Tech::Cb)).unwrap()] = 0.9;
    x[f.id(VarKey::Tech(0, Tech::Hp)).unwrap()] = 0.1;
    let d = round_point(&f, &inst, &x, None);
    assert_eq!(d.arcs[0].tech, Some(Tech::Cb));
    assert!(d.arcs[0].pipe);
    let c = incumbent_from_point(&f, &inst, &x, None, &PhysicsOptions::default()).unwrap();
    assert_eq!(c.decisions, d);

    // A minimum voltage above the boiler's operating point rejects it.
    let mut strict = inst.clone();
    strict.arcs[0].demand.cb.mel = 7800.0;
    strict.physical.u_min = 395.0;
    let f = build_formulation(&strict, ModelOptions::default()).unwrap();
    assert!(incumbent_from_point(&f, &strict, &x, None, &PhysicsOptions::default()).is_none());
}

#[test]
fn snapping_to_the_grid() {
    assert_eq!(snap(&[0.0, 0.5, 1.0], 0.3), 0.5);
    assert_eq!(snap(&[0.0, 1.0], 0.2), 0.0);
}
