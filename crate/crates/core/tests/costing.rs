use desnet::costing::*;
use desnet::formulation::{build_formulation, PlanPoint};
use desnet::instance::samples::table_one_arc;
use desnet::instance::{generate_instance, GeneratorSpec, Instance, ModelOptions, Tech, Topology};
use desnet::physics::{embed, simulate, PhysicsOptions};
use desnet::plan::PlanDecisions;
use proptest::prelude::*;

fn point(values: &[(&str, f64)]) -> PlanPoint {
    let mut pt = PlanPoint::default();
    for &(k, v) in values {
        pt.set(k, v);
    }
    pt
}

/// A plan point on the one-arc instance with every cost input named.
fn one_arc_point(overrides: &[(&str, f64)]) -> PlanPoint {
    let inst = table_one_arc();
    let f = build_formulation(&inst, ModelOptions::default()).unwrap();
    let mut pt = f.point(&vec![0.0; f.var_count()]);
    for &(k, v) in overrides {
        pt.set(k, v);
    }
    pt
}

#[test]
fn energy_purchase() {
    let mut inst = table_one_arc();
    inst.costs.alpha_p_e = 0.30;
    inst.costs.alpha_p_g = 0.08;
    let pt = one_arc_point(&[("s0_Esum", 14771.0), ("s0_Gsum", 73478.0)]);
    let c = cost_breakdown(&inst, ModelOptions::default(), &pt).unwrap();
    assert!((c.energy - 10309.54).abs() < 1e-9);
}

#[test]
fn renovation_cost() {
    let mut inst = table_one_arc();
    inst.costs.nu1 = 0.05;
    let pt = one_arc_point(&[("x1_cb[0,1]", 1.0)]);
    let c = cost_breakdown(&inst, ModelOptions::default(), &pt).unwrap();
    assert!((c.renovation - 3305.8).abs() < 1e-9);
}

#[test]
fn zero_plan_costs_nothing() {
    let inst = table_one_arc();
    let c = cost_breakdown(&inst, ModelOptions::default(), &one_arc_point(&[])).unwrap();
    assert_eq!(c.total, 0.0);
    assert_eq!(c.emission, 0.0);
    assert!(emission(&inst, &one_arc_point(&[])).unwrap().within_target);
}

#[test]
fn emission_boundary_is_inclusive() {
    let mut inst = table_one_arc();
    inst.costs.kappa_e = 0.4;
    inst.costs.kappa_g = 0.2;
    let pt = point(&[("s0_Esum", 14771.0), ("s0_Gsum", 73478.0)]);
    let e = emission(&inst, &pt).unwrap();
    assert!((e.emission - 20604.0).abs() < 1e-9);
    inst.costs.e_target = e.emission;
    assert!(emission(&inst, &pt).unwrap().within_target);
    inst.costs.e_target = e.emission - 1e-6;
    assert!(!emission(&inst, &pt).unwrap().within_target);
}

#[test]
fn missing_value_is_named() {
    let inst = table_one_arc();
    let err = cost_breakdown(&inst, ModelOptions::default(), &point(&[("s0_Esum", 1.0)])).unwrap_err();
    assert!(err.to_string().contains("s0_Gsum"));
}

fn plans(inst: &Instance) -> Vec<PlanDecisions> {
    let mut out: Vec<PlanDecisions> = Tech::ALL.iter().map(|&t| PlanDecisions::uniform(inst, t)).collect();
    let mut mixed = PlanDecisions::uniform(inst, Tech::Chp);
    for (n, k) in inst.heat_arcs().enumerate() {
        mixed.arcs[k].reno1 = 1.0;
        mixed.arcs[k].reno2 = 0.25 * (n % 4) as f64;
    }
    out.push(mixed);
    out
}

#[test]
fn costing_agrees_with_the_objective() {
    for seed in 0..5 {
        let inst = generate_instance(&GeneratorSpec::new(6, Topology::Tree, seed)).unwrap();
        let f = build_formulation(&inst, ModelOptions::default()).unwrap();
        for d in plans(&inst) {
            // Uniform plans need pipes along the paths to gas users; costs
            // do not care whether the plan is operable.
            let mut d = d;
            for a in &mut d.arcs {
                a.pipe = true;
            }
            let s = simulate(&inst, &d, &PhysicsOptions::default()).unwrap();
            let x = embed(&f, &inst, &d, &s);
            let obj = f.objective_value(&x);
            let via_point = cost_breakdown(&inst, ModelOptions::default(), &f.point(&x)).unwrap();
            let via_plan = plan_costs(&inst, ModelOptions::default(), &d, &s);
            assert!((via_point.total - obj).abs() <= 1e-9 * obj.abs());
            assert!((via_plan.total - obj).abs() <= 1e-9 * obj.abs());
            let sum = via_plan.energy
                + via_plan.tax
                + via_plan.allocation
                + via_plan.grid
                + via_plan.tech
                + via_plan.renovation;
            assert!((sum - via_plan.total).abs() <= 1e-12 * sum.abs());
        }
    }
}

#[test]
fn heat_pumps_pay_only_for_built_pipes() {
    let inst = generate_instance(&GeneratorSpec::new(5, Topology::Tree, 9)).unwrap();
    let d = PlanDecisions::uniform(&inst, Tech::Hp);
    let s = simulate(&inst, &d, &PhysicsOptions::default()).unwrap();
    assert_eq!(plan_costs(&inst, ModelOptions::default(), &d, &s).grid, 0.0);
    let mut one = d.clone();
    one.arcs[2].pipe = true;
    let s = simulate(&inst, &one, &PhysicsOptions::default()).unwrap();
    assert_eq!(plan_costs(&inst, ModelOptions::default(), &one, &s).grid, inst.arcs[2].zeta_g.unwrap());
}

#[test]
fn emission_floor_is_the_cleanest_plan() {
    for seed in 0..5 {
        let inst = generate_instance(&GeneratorSpec::new(5, Topology::Tree, seed)).unwrap();
        let floor = emission_floor(&inst);
        for d in plans(&inst) {
            let mut d = d;
            for a in &mut d.arcs {
                a.pipe = true;
            }
            let s = simulate(&inst, &d, &PhysicsOptions::default()).unwrap();
            assert!(plan_costs(&inst, ModelOptions::default(), &d, &s).emission >= floor - 1e-9);
        }
    }
}

#[test]
fn table_text_lists_every_item() {
    let inst = table_one_arc();
    let d = PlanDecisions::uniform(&inst, Tech::Cb);
    let s = simulate(&inst, &d, &PhysicsOptions::default()).unwrap();
    let text = plan_costs(&inst, ModelOptions::default(), &d, &s).table();
    for name in ["C_energy", "C_tax", "C_allocation", "C_grid", "C_tech", "C_renov", "total", "E_carbon"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(!text.contains("C_grid_e"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prices_scale_costs(c in 0.1f64..10.0, seed in 0u64..20) {
        let inst = generate_instance(&GeneratorSpec::new(4, Topology::Tree, seed)).unwrap();
        let mut d = PlanDecisions::uniform(&inst, Tech::Chp);
        for a in &mut d.arcs {
            a.pipe = true;
        }
        let s = simulate(&inst, &d, &PhysicsOptions::default()).unwrap();
        let base = plan_costs(&inst, ModelOptions::default(), &d, &s);
        let mut scaled = inst.clone();
        let p = &mut scaled.costs;
        for v in [&mut p.alpha_p_e, &mut p.alpha_p_g, &mut p.beta_e, &mut p.beta_g, &mut p.alpha_a_e, &mut p.alpha_a_g, &mut p.nu1, &mut p.nu2] {
            *v *= c;
        }
        for g in &mut p.gamma {
            *g *= c;
        }
        for a in &mut scaled.arcs {
            a.zeta_g = a.zeta_g.map(|z| z * c);
        }
        let got = plan_costs(&scaled, ModelOptions::default(), &d, &s);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
        prop_assert!(close(got.energy, c * base.energy));
        prop_assert!(close(got.tax, c * base.tax));
        prop_assert!(close(got.allocation, c * base.allocation));
        prop_assert!(close(got.grid, c * base.grid));
        prop_assert!(close(got.tech, c * base.tech));
        prop_assert!(close(got.renovation, c * base.renovation));
        prop_assert!(close(got.total, c * base.total));
        prop_assert_eq!(got.emission, base.emission);
    }
}
