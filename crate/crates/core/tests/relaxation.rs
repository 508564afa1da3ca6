use desnet::formulation::{build_formulation, Formulation, VarKey};
use desnet::instance::samples::table_one_arc;
use desnet::instance::{generate_instance, GeneratorSpec, Instance, ModelOptions, Tech, Topology};
use desnet::lp::{solve_lp, LpOptions, LpStatus};
use desnet::physics::{check_feasibility, embed, simulate, PhysicsOptions};
use desnet::plan::PlanDecisions;
use desnet::relaxation::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cut_value(c: &EnvelopeCut<f64>, x: f64, y: f64) -> f64 {
    c.cx * x + c.cy * y + c.c0
}

/// Interval of w allowed by the cuts at (x, y).
fn allowed(cuts: &[EnvelopeCut<f64>], x: f64, y: f64) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for c in cuts {
        match c.sense {
            CutSense::Lower => lo = lo.max(cut_value(c, x, y)),
            CutSense::Upper => hi = hi.min(cut_value(c, x, y)),
        }
    }
    (lo, hi)
}

#[test]
fn envelope_examples() {
    let cuts = mccormick_envelope((0.0, 1.0), (-5.0, 5.0)).unwrap();
    let (lo, hi) = allowed(&cuts, 1.0, 3.0);
    assert!((lo - 3.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
    let (lo, hi) = allowed(&cuts, 0.5, 0.0);
    assert_eq!((lo, hi), (-2.5, 2.5));

    let cuts = mccormick_envelope((2.0, 2.0), (-5.0, 5.0)).unwrap();
    for y in [-5.0, -1.0, 0.0, 4.5] {
        let (lo, hi) = allowed(&cuts, 2.0, y);
        assert_eq!((lo, hi), (2.0 * y, 2.0 * y));
    }
    assert!(mccormick_envelope((0.0, f64::INFINITY), (0.0, 1.0)).is_err());
}

#[test]
fn quadratic_examples() {
    let cuts = relax_quadratic((-2.0, 2.0), &tangent_points(-2.0, 2.0, 3)).unwrap();
    let (lo, hi) = allowed(&cuts, 1.0, 0.0);
    assert_eq!((lo, hi), (0.0, 4.0));
    let cuts = relax_quadratic((3.0, 3.0), &tangent_points(3.0, 3.0, 3)).unwrap();
    assert_eq!(allowed(&cuts, 3.0, 0.0), (9.0, 9.0));
    // Secant is exact at both ends.
    let cuts = relax_quadratic((-1.0, 4.0), &[0.5]).unwrap();
    for f in [-1.0, 4.0] {
        assert!((allowed(&cuts, f, 0.0).1 - f * f).abs() < 1e-14);
    }
    assert!(relax_quadratic((1.0, 0.0), &[0.5]).is_err());
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    (a.min(b), a.max(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn products_stay_inside_their_envelope(
        a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0, d in -50.0f64..50.0,
        s in 0.0f64..1.0, t in 0.0f64..1.0,
    ) {
        let (xb, yb) = (ordered(a, b), ordered(c, d));
        let x = xb.0 + s * (xb.1 - xb.0);
        let y = yb.0 + t * (yb.1 - yb.0);
        let (lo, hi) = allowed(&mccormick_envelope(xb, yb).unwrap(), x, y);
        let tol = 1e-9 * (1.0 + (x * y).abs());
        prop_assert!(lo <= x * y + tol && x * y <= hi + tol);
    }

    #[test]
    fn binary_factor_pins_the_product(bit in 0u8..2, c in -50.0f64..50.0, d in -50.0f64..50.0, t in 0.0f64..1.0) {
        let yb = ordered(c, d);
        let y = yb.0 + t * (yb.1 - yb.0);
        let x = f64::from(bit);
        let (lo, hi) = allowed(&mccormick_envelope((0.0, 1.0), yb).unwrap(), x, y);
        prop_assert!((lo - x * y).abs() <= 1e-12 * (1.0 + y.abs()));
        prop_assert!((hi - x * y).abs() <= 1e-12 * (1.0 + y.abs()));
    }

    #[test]
    fn squares_stay_inside_their_envelope(a in -50.0f64..50.0, b in -50.0f64..50.0, s in 0.0f64..1.0, n in 1usize..6) {
        let fb = ordered(a, b);
        let f = fb.0 + s * (fb.1 - fb.0);
        let (lo, hi) = allowed(&relax_quadratic(fb, &tangent_points(fb.0, fb.1, n)).unwrap(), f, 0.0);
        let tol = 1e-9 * (1.0 + f * f);
        prop_assert!(lo <= f * f + tol && f * f <= hi + tol);
    }
}

fn lp_optimum(r: &LinearRelaxation) -> Option<f64> {
    let sol = solve_lp(&r.to_lp::<f64>(), &LpOptions::default()).unwrap();
    (sol.status == LpStatus::Optimal).then_some(sol.objective)
}

fn operable_points(inst: &Instance, f: &Formulation) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let techs: Vec<usize> = inst.heat_arcs().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let mut d = PlanDecisions::uniform(inst, Tech::Hp);
        let parents = inst.network.parent_arcs();
        for &k in &techs {
            let t = Tech::ALL[rng.gen_range(0..3)];
            d.arcs[k].tech = Some(t);
            d.arcs[k].reno1 = rng.gen_range(0.0..1.0);
            if t.uses_gas() {
                let (i, j) = inst.endpoints(k);
                for node in [i, j] {
                    for a in inst.network.path_to_source(&parents, node) {
                        d.arcs[a].pipe = true;
                    }
                }
                d.arcs[k].pipe = true;
            }
        }
        if check_feasibility(inst, &d, &PhysicsOptions::default()).is_feasible() {
            let s = simulate(inst, &d, &PhysicsOptions::default()).unwrap();
            out.push(embed(f, inst, &d, &s));
        }
    }
    out
}

#[test]
fn physics_points_satisfy_the_relaxation() {
    let mut tested = 0;
    for seed in 0..6 {
        let inst = generate_instance(&GeneratorSpec::new(5, Topology::Tree, seed)).unwrap();
        let f = build_formulation(&inst, ModelOptions::default()).unwrap();
        let r = relax(&f, &VarBox::of(&f), &RelaxOptions::default()).unwrap();
        assert!(!r.empty_box);
        let bound = lp_optimum(&r).expect("root relaxation feasible");
        for x in operable_points(&inst, &f) {
            let lifted = r.lift(&x);
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(r.max_violation(&lifted) <= 1e-7 * scale, "{}", r.max_violation(&lifted));
            assert!(bound <= f.objective_value(&x) + 1e-9 * bound.abs());
            tested += 1;
        }
    }
    assert!(tested >= 20, "{tested}");
}

#[test]
fn every_product_has_four_rows_and_loss_cut() {
    let f = build_formulation(&table_one_arc(), ModelOptions::default()).unwrap();
    let r = relax(&f, &VarBox::of(&f), &RelaxOptions::default()).unwrap();
    let aux: Vec<_> =
        r.columns.iter().enumerate().filter(|(_, c)| matches!(c.origin, ColumnOrigin::Product { .. })).collect();
    assert_eq!(aux.len(), 2);
    for (col, _) in aux {
        let n = r.rows.iter().filter(|row| row.origin == RowOrigin::Envelope(col)).count();
        assert_eq!(n, 4);
    }
    assert_eq!(r.rows.iter().filter(|row| matches!(row.origin, RowOrigin::LossCut(_))).count(), 1);
    for (&src, rows) in &r.envelopes {
        assert!(f.rows[src].nonlinear.is_some());
        assert!(!rows.is_empty());
    }
}

#[test]
fn single_variable_rows_fold_into_the_box() {
    let f = build_formulation(&table_one_arc(), ModelOptions::default()).unwrap();
    let r = relax(&f, &VarBox::of(&f), &RelaxOptions::default()).unwrap();
    let u0 = f.id(VarKey::Potential(0)).unwrap();
    assert_eq!((r.columns[u0].lo, r.columns[u0].hi), (400.0, 400.0));
    assert!(r.rows.iter().all(|row| row.id != "sourcevolt" && row.id != "carbontar"));

    let mut tight = table_one_arc();
    tight.costs.e_target = -1.0;
    let f = build_formulation(&tight, ModelOptions::default()).unwrap();
    assert!(relax(&f, &VarBox::of(&f), &RelaxOptions::default()).unwrap().empty_box);
}

#[test]
fn linear_formulation_relaxes_to_itself() {
    let f = build_formulation(&table_one_arc(), ModelOptions::default()).unwrap();
    let r = relax(&f, &VarBox::of(&f), &RelaxOptions { loss_cuts: false, ..Default::default() }).unwrap();
    let linear_rows =
        f.rows.iter().filter(|row| row.is_linear() && row.active_when.is_none() && row.terms.len() > 1).count();
    let model_rows = r.rows.iter().filter(|row| matches!(row.origin, RowOrigin::Model(_))).count();
    let nonlinear = f.rows.iter().filter(|row| !row.is_linear()).count();
    assert_eq!(model_rows, linear_rows + nonlinear);
}

#[test]
fn conditional_rows_follow_their_indicator() {
    let mut inst = table_one_arc();
    inst.cable_catalog = Some(desnet::instance::CableCatalog {
        types: vec![
            desnet::instance::CableType { r_per_m: 0.01, zeta_per_m: 1.0 },
            desnet::instance::CableType { r_per_m: 0.005, zeta_per_m: 2.0 },
        ],
    });
    let opts = ModelOptions { cable_sizing: true, pipe_sizing: false };
    let f = build_formulation(&inst, opts).unwrap();
    let mut bx = VarBox::of(&f);
    let y0 = f.id(VarKey::CableType(0, 0)).unwrap();
    let y1 = f.id(VarKey::CableType(0, 1)).unwrap();
    let open = relax(&f, &bx, &RelaxOptions::default()).unwrap();
    let big_m = open
        .rows
        .iter()
        .filter(|r| r.id.starts_with("ohmic") && (r.id.ends_with(":upper") || r.id.ends_with(":lower")))
        .count();
    assert_eq!(big_m, 8);

    bx.lo[y0] = 1.0;
    bx.hi[y1] = 0.0;
    let fixed = relax(&f, &bx, &RelaxOptions::default()).unwrap();
    let ids: Vec<&str> = fixed.rows.iter().map(|r| r.id.as_str()).filter(|id| id.starts_with("ohmic")).collect();
    assert_eq!(ids, ["ohmic_in_k0[0,1]", "ohmic_out_k0[0,1]"]);
}

#[test]
fn shrinking_the_box_never_lowers_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..4 {
        let inst = generate_instance(&GeneratorSpec::new(4, Topology::Tree, seed)).unwrap();
        let f = build_formulation(&inst, ModelOptions::default()).unwrap();
        let mut bx = VarBox::of(&f);
        let mut last = lp_optimum(&relax(&f, &bx, &RelaxOptions::default()).unwrap()).unwrap();
        let cont: Vec<usize> =
            (0..f.var_count()).filter(|&v| !f.catalog.var(v).is_binary() && bx.width(v) > 0.0).collect();
        for _ in 0..15 {
            let v = cont[rng.gen_range(0..cont.len())];
            let cut = bx.lo[v] + rng.gen_range(0.1..0.9) * bx.width(v);
            if rng.gen() {
                bx.lo[v] = cut;
            } else {
                bx.hi[v] = cut;
            }
            let r = relax(&f, &bx, &RelaxOptions::default()).unwrap();
            match lp_optimum(&r) {
                Some(v) => {
                    assert!(v >= last - 1e-7 * last.abs().max(1.0), "{v} < {last}");
                    last = v;
                }
                None => break,
            }
        }
    }
}

#[test]
fn added_tangent_cuts_off_the_point() {
    let f = build_formulation(&table_one_arc(), ModelOptions::default()).unwrap();
    let mut r = relax(&f, &VarBox::of(&f), &RelaxOptions::default()).unwrap();
    let g = f.id(VarKey::GasFlow(0)).unwrap();
    let col = r.square_column(g).unwrap();
    let mut x = r.lift(&vec![0.0; f.var_count()]);
    x[g] = 7.0;
    x[col] = 40.0;
    let before = r.rows.len();
    assert!(r.add_tangent(g, 7.0));
    let row = &r.rows[before];
    let a: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum();
    assert!(a < row.lo);
}
