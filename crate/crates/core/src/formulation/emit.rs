//! Row emitters, one per equation family.

use crate::instance::{Instance, ModelOptions, Tech};

use super::catalog::{CostTerm, VarId, VarKey, VariableCatalog};
use super::rows::{ConstraintRow, Nonlinear, Sense};

fn arc_id(inst: &Instance, k: usize) -> String {
    let (i, j) = inst.endpoints(k);
    format!("[{i},{j}]")
}

struct Sink<'a> {
    inst: &'a Instance,
    cat: &'a VariableCatalog,
    rows: Vec<ConstraintRow>,
}

impl<'a> Sink<'a> {
    fn new(inst: &'a Instance, cat: &'a VariableCatalog) -> Self {
        Self { inst, cat, rows: Vec::new() }
    }

    fn v(&self, key: VarKey) -> VarId {
        self.cat.expect(key)
    }

    fn push(
        &mut self,
        id: String,
        tag: &'static str,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> &mut ConstraintRow {
        self.rows.push(ConstraintRow::linear(id, tag, terms, sense, rhs));
        self.rows.last_mut().unwrap()
    }

    fn arc(&self, k: usize) -> String {
        arc_id(self.inst, k)
    }
}

/// One `x_cb + x_chp + x_hp = 1` row per arc with heat demand. Technology
/// variables of the other arcs are fixed to zero by their bounds.
pub fn emit_technology_constraints(inst: &Instance, cat: &VariableCatalog) -> Vec<ConstraintRow> {
    let mut s = Sink::new(inst, cat);
    for k in inst.heat_arcs() {
        let terms = Tech::ALL.iter().map(|&t| (s.v(VarKey::Tech(k, t)), 1.0)).collect();
        s.push(format!("atmost1MECT{}", s.arc(k)), "atmost1MECT", terms, Sense::Eq, 1.0);
    }
    s.rows
}

pub fn emit_renovation_constraints(inst: &Instance, cat: &VariableCatalog) -> Vec<ConstraintRow> {
    let mut s = Sink::new(inst, cat);
    for k in inst.heat_arcs() {
        let a = s.arc(k);
        for t in Tech::ALL {
            let (x, x1, x2, z) = (
                s.v(VarKey::Tech(k, t)),
                s.v(VarKey::Reno1(k, t)),
                s.v(VarKey::Reno2(k, t)),
                s.v(VarKey::RenoDone(k, t)),
            );
            let l = t.label();
            s.push(format!("installreno_{l}{a}"), "installreno", vec![(x, 1.0), (x1, -1.0)], Sense::Ge, 0.0);
            s.push(format!("firstsecren_order_{l}{a}"), "firstsecren", vec![(x1, 1.0), (x2, -1.0)], Sense::Ge, 0.0);
            s.push(format!("firstsecren_done_{l}{a}"), "firstsecren", vec![(x1, 1.0), (z, -1.0)], Sense::Ge, 0.0);
            s.push(format!("firstsecren_start_{l}{a}"), "firstsecren", vec![(x2, 1.0), (z, -1.0)], Sense::Le, 0.0);
        }
    }
    s.rows
}

/// Terms of `c·(x_t − μ₁x¹_t − μ₂x²_t)` with the sign flipped, ready to sit
/// on the left-hand side next to the defined variable.
fn discounted(s: &Sink<'_>, k: usize, t: Tech, full: f64, heating: f64) -> Vec<(VarId, f64)> {
    let c = &s.inst.costs;
    vec![
        (s.v(VarKey::Tech(k, t)), -full),
        (s.v(VarKey::Reno1(k, t)), heating * c.mu1),
        (s.v(VarKey::Reno2(k, t)), heating * c.mu2),
    ]
}

pub fn emit_demand_coupling(inst: &Instance, cat: &VariableCatalog) -> Vec<ConstraintRow> {
    let mut s = Sink::new(inst, cat);
    for k in 0..inst.arc_count() {
        let a = s.arc(k);
        let d = *inst.demand(k);
        let (esum, emax, gsum, gmax) =
            (s.v(VarKey::Esum(k)), s.v(VarKey::Emax(k)), s.v(VarKey::Gsum(k)), s.v(VarKey::Gmax(k)));
        if !d.has_heat() {
            // No technology: the pure electricity demand, no gas.
            s.push(format!("gasrenored_sum{a}"), "gasrenored", vec![(gsum, 1.0)], Sense::Eq, 0.0);
            s.push(format!("gasrenored_max{a}"), "gasrenored", vec![(gmax, 1.0)], Sense::Eq, 0.0);
            s.push(format!("redelec_sum{a}"), "redelec", vec![(esum, 1.0)], Sense::Eq, d.sel);
            s.push(format!("redelec_max{a}"), "redelec", vec![(emax, 1.0)], Sense::Eq, d.mel);
            continue;
        }
        let mut g_sum = vec![(gsum, 1.0)];
        let mut g_max = vec![(gmax, 1.0)];
        for t in [Tech::Cb, Tech::Chp] {
            let l = *d.tech(t);
            g_sum.extend(discounted(&s, k, t, l.sgl, l.sgl));
            g_max.extend(discounted(&s, k, t, l.mgl, l.mgl));
        }
        s.push(format!("gasrenored_sum{a}"), "gasrenored", g_sum, Sense::Eq, 0.0);
        s.push(format!("gasrenored_max{a}"), "gasrenored", g_max, Sense::Eq, 0.0);

        let mut e_sum = vec![(esum, 1.0)];
        let mut e_max = vec![(emax, 1.0)];
        for t in Tech::ALL {
            let l = *d.tech(t);
            let (te_sum, te_max) = (s.v(VarKey::TechEsum(k, t)), s.v(VarKey::TechEmax(k, t)));
            // SEL·x + (SEL_t − SEL)(x − μ₁x¹ − μ₂x²), with the x coefficients merged.
            let mut row = vec![(te_sum, 1.0)];
            row.extend(discounted(&s, k, t, l.sel, l.sel - d.sel));
            s.push(format!("ereno_sum_{}{a}", t.label()), "ereno", row, Sense::Eq, 0.0);
            let mut row = vec![(te_max, 1.0)];
            row.extend(discounted(&s, k, t, l.mel, l.mel - d.mel));
            s.push(format!("ereno_max_{}{a}", t.label()), "ereno", row, Sense::Eq, 0.0);
            e_sum.push((te_sum, -1.0));
            e_max.push((te_max, -1.0));
        }
        s.push(format!("redelec_sum{a}"), "redelec", e_sum, Sense::Eq, 0.0);
        s.push(format!("redelec_max{a}"), "redelec", e_max, Sense::Eq, 0.0);
    }

    let net = &inst.network;
    for i in 0..inst.node_count() {
        let incident: Vec<usize> = net.incoming(i).chain(net.outgoing(i)).collect();
        let mut e = vec![(s.v(VarKey::NodeEmax(i)), 1.0)];
        let mut g = vec![(s.v(VarKey::NodeGmax(i)), 1.0)];
        for &k in &incident {
            e.push((s.v(VarKey::Emax(k)), -0.5));
            g.push((s.v(VarKey::Gmax(k)), -0.5));
        }
        s.push(format!("artmove_e[{i}]"), "artmove", e, Sense::Eq, 0.0);
        s.push(format!("artmove_g[{i}]"), "artmove", g, Sense::Eq, 0.0);
    }

    let mut e = vec![(s.v(VarKey::SourceEsum), 1.0)];
    let mut g = vec![(s.v(VarKey::SourceGsum), 1.0)];
    for k in 0..inst.arc_count() {
        e.push((s.v(VarKey::Esum(k)), -1.0));
        g.push((s.v(VarKey::Gsum(k)), -1.0));
    }
    s.push("injconst_e".into(), "injconst", e, Sense::Eq, 0.0);
    s.push("injconst_g".into(), "injconst", g, Sense::Eq, 0.0);
    s.rows
}

/// Electric network rows. With `cable_sizing` the Ohmic rows are emitted
/// once per catalog type and made conditional on the type indicator.
pub fn emit_electric_flow(inst: &Instance, cat: &VariableCatalog, opts: ModelOptions) -> Vec<ConstraintRow> {
    let mut s = Sink::new(inst, cat);
    let ph = inst.physical;
    let net = &inst.network;
    s.push("sourcevolt".into(), "sourcevolt", vec![(s.v(VarKey::Potential(0)), 1.0)], Sense::Eq, ph.u_max);
    for i in 0..inst.node_count() {
        let u = s.v(VarKey::Potential(i));
        s.push(format!("voltbounds_lo[{i}]"), "voltbounds", vec![(u, 1.0)], Sense::Ge, ph.u_min);
        s.push(format!("voltbounds_hi[{i}]"), "voltbounds", vec![(u, 1.0)], Sense::Le, ph.u_max);
    }
    for k in 0..inst.arc_count() {
        let a = s.arc(k);
        let (i, j) = inst.endpoints(k);
        let (ui, uj, du) = (s.v(VarKey::Potential(i)), s.v(VarKey::Potential(j)), s.v(VarKey::VoltageDrop(k)));
        let (fin, fout) = (s.v(VarKey::ElecIn(k)), s.v(VarKey::ElecOut(k)));
        s.push(format!("voltdrop{a}"), "voltdrop", vec![(du, 1.0), (ui, -1.0), (uj, 1.0)], Sense::Eq, 0.0);
        let ohmic = |s: &mut Sink<'_>, suffix: String, r: f64, indicator: Option<VarId>| {
            for (f, u, dir) in [(fin, uj, "in"), (fout, ui, "out")] {
                let row =
                    ConstraintRow::linear(format!("ohmic_{dir}{suffix}{a}"), "ohmic", vec![(f, r)], Sense::Eq, 0.0)
                        .with_nonlinear(Nonlinear::Product { a: u, b: du, coef: -ph.a_e });
                s.rows.push(match indicator {
                    Some(y) => row.when(y),
                    None => row,
                });
            }
        };
        if opts.cable_sizing {
            let types = inst.cable_catalog.as_ref().map_or(0, |c| c.types.len());
            let sel: Vec<(VarId, f64)> = (0..types).map(|c| (s.v(VarKey::CableType(k, c)), 1.0)).collect();
            s.push(format!("cabletype{a}"), "cabletype", sel, Sense::Eq, 1.0);
            for c in 0..types {
                let r = inst.cable_resistance(k, Some(c)).expect("catalog checked");
                let y = s.v(VarKey::CableType(k, c));
                ohmic(&mut s, format!("_k{c}"), r, Some(y));
            }
        } else {
            let r = inst.cable_resistance(k, None).expect("R_e checked");
            ohmic(&mut s, String::new(), r, None);
        }
    }
    for i in 0..inst.node_count() {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        terms.extend(net.incoming(i).map(|k| (s.v(VarKey::ElecIn(k)), 1.0)));
        terms.extend(net.outgoing(i).map(|k| (s.v(VarKey::ElecOut(k)), -1.0)));
        terms.push((s.v(VarKey::NodeEmax(i)), -1.0));
        if i == 0 {
            terms.insert(0, (s.v(VarKey::SourceEmax), 1.0));
            s.push("elecbalansource".into(), "elecbalansource", terms, Sense::Eq, 0.0);
        } else {
            s.push(format!("elecbalansink[{i}]"), "elecbalansink", terms, Sense::Eq, 0.0);
        }
    }
    let mut terms = vec![(s.v(VarKey::SourceEmax), 1.0)];
    terms.extend((0..inst.node_count()).map(|i| (s.v(VarKey::NodeEmax(i)), -1.0)));
    s.push("injectmax".into(), "injectmax", terms, Sense::Ge, 0.0);
    s.rows
}

pub fn emit_gas_flow(inst: &Instance, cat: &VariableCatalog, opts: ModelOptions) -> Vec<ConstraintRow> {
    let mut s = Sink::new(inst, cat);
    let ph = inst.physical;
    let net = &inst.network;
    let (dp_max, dp_min) = (ph.dp_max(), ph.dp_min());
    let (q_max, q_min) = (ph.q_max, ph.q_min());
    let a2 = ph.a_g * ph.a_g;
    s.push("gpsource".into(), "gpsource", vec![(s.v(VarKey::Pressure(0)), 1.0)], Sense::Eq, ph.p_max);
    for i in 0..inst.node_count() {
        let p = s.v(VarKey::Pressure(i));
        s.push(format!("gpbounds_lo[{i}]"), "gpbounds", vec![(p, 1.0)], Sense::Ge, ph.p_min);
        s.push(format!("gpbounds_hi[{i}]"), "gpbounds", vec![(p, 1.0)], Sense::Le, ph.p_max);
    }
    for k in 0..inst.arc_count() {
        let a = s.arc(k);
        let (i, j) = inst.endpoints(k);
        let yg = s.v(VarKey::PipeBuilt(k));
        let (yp, ym) = (s.v(VarKey::FlowPos(k)), s.v(VarKey::FlowNeg(k)));
        let (f, q, pb, pp) = (
            s.v(VarKey::GasFlow(k)),
            s.v(VarKey::GasVolume(k)),
            s.v(VarKey::PressureLoss(k)),
            s.v(VarKey::PressureLossAbs(k)),
        );
        if inst.demand(k).has_heat() {
            for t in [Tech::Cb, Tech::Chp] {
                let x = s.v(VarKey::Tech(k, t));
                s.push(format!("pipebuild_{}{a}", t.label()), "pipebuild", vec![(x, 1.0), (yg, -1.0)], Sense::Le, 0.0);
            }
        }
        let (pi, pj) = (s.v(VarKey::Pressure(i)), s.v(VarKey::Pressure(j)));
        s.push(format!("gploss{a}"), "gploss", vec![(pb, 1.0), (pi, -1.0), (pj, 1.0)], Sense::Eq, 0.0);
        s.push(format!("qflow{a}"), "qflow", vec![(q, 1.0), (f, -1.0 / ph.a_g)], Sense::Eq, 0.0);

        s.push(format!("refgflow_qlo{a}"), "refgflow", vec![(q, 1.0), (yp, q_min)], Sense::Ge, q_min);
        s.push(format!("refgflow_qhi{a}"), "refgflow", vec![(q, 1.0), (ym, q_max)], Sense::Le, q_max);
        s.push(format!("refgflow_plo{a}"), "refgflow", vec![(pb, 1.0), (yp, dp_min)], Sense::Ge, dp_min);
        s.push(format!("refgflow_phi{a}"), "refgflow", vec![(pb, 1.0), (ym, dp_max)], Sense::Le, dp_max);
        s.push(format!("refgflow_dir{a}"), "refgflow", vec![(yp, 1.0), (ym, 1.0)], Sense::Eq, 1.0);

        s.push(
            format!("pbarref1{a}"),
            "pbarref",
            vec![(pp, 1.0), (yp, -dp_max), (ym, dp_max), (pb, -1.0)],
            Sense::Ge,
            -dp_max,
        );
        s.push(
            format!("pbarref2{a}"),
            "pbarref",
            vec![(pp, 1.0), (yp, -dp_min), (ym, dp_min), (pb, 1.0)],
            Sense::Ge,
            dp_min,
        );
        s.push(
            format!("pbarref3{a}"),
            "pbarref",
            vec![(pp, 1.0), (yp, -dp_min), (ym, dp_min), (pb, -1.0)],
            Sense::Le,
            -dp_min,
        );
        s.push(
            format!("pbarref4{a}"),
            "pbarref",
            vec![(pp, 1.0), (yp, -dp_max), (ym, dp_max), (pb, 1.0)],
            Sense::Le,
            dp_max,
        );

        let dw = |s: &mut Sink<'_>, suffix: String, r: f64, y: VarId, conditional: bool| {
            let sq = Nonlinear::Square { v: f, coef: r };
            let rows = [
                ConstraintRow::linear(
                    format!("DWfinal1{suffix}{a}"),
                    "DWfinal",
                    vec![(pp, -a2), (y, -a2 * dp_max)],
                    Sense::Ge,
                    -a2 * dp_max,
                ),
                ConstraintRow::linear(format!("DWfinal2{suffix}{a}"), "DWfinal", vec![(pp, -a2)], Sense::Le, 0.0),
                ConstraintRow::linear(
                    format!("DWfinal3{suffix}{a}"),
                    "DWfinal",
                    vec![(y, -a2 * dp_max)],
                    Sense::Le,
                    0.0,
                ),
            ];
            for (n, row) in rows.into_iter().enumerate() {
                let row = row.with_nonlinear(sq);
                // The first row relaxes itself when its indicator is 0.
                s.rows.push(if conditional && n > 0 { row.when(y) } else { row });
            }
        };
        if opts.pipe_sizing {
            let types = inst.pipe_catalog.as_ref().map_or(0, |c| c.types.len());
            let mut sel: Vec<(VarId, f64)> = (0..types).map(|c| (s.v(VarKey::PipeType(k, c)), 1.0)).collect();
            sel.push((yg, -1.0));
            s.push(format!("pipetype{a}"), "pipetype", sel, Sense::Eq, 0.0);
            for c in 0..types {
                let r = inst.pipe_resistance(k, Some(c)).expect("catalog checked");
                let y = s.v(VarKey::PipeType(k, c));
                dw(&mut s, format!("_k{c}"), r, y, true);
            }
        } else {
            let r = inst.pipe_resistance(k, None).expect("R_g checked");
            dw(&mut s, String::new(), r, yg, false);
        }

        let cap = ph.gas_flow_cap();
        s.push(format!("builgaspiperel_hi{a}"), "builgaspiperel", vec![(f, 1.0), (yg, -cap)], Sense::Le, 0.0);
        s.push(format!("builgaspiperel_lo{a}"), "builgaspiperel", vec![(f, 1.0), (yg, cap)], Sense::Ge, 0.0);
    }
    for i in 0..inst.node_count() {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        terms.extend(net.incoming(i).map(|k| (s.v(VarKey::GasFlow(k)), 1.0)));
        terms.extend(net.outgoing(i).map(|k| (s.v(VarKey::GasFlow(k)), -1.0)));
        terms.push((s.v(VarKey::NodeGmax(i)), -1.0));
        if i == 0 {
            terms.insert(0, (s.v(VarKey::SourceGmax), 1.0));
            s.push("gasbalansource".into(), "gasbalansource", terms, Sense::Eq, 0.0);
        } else {
            s.push(format!("gasbalansink[{i}]"), "gasbalansink", terms, Sense::Eq, 0.0);
        }
    }
    s.rows
}

type CostDefinition = (CostTerm, &'static str, Vec<(VarId, f64)>);

/// Linear definition `C = Σ terms` of each itemized cost, with its tag.
pub(crate) fn cost_definitions(inst: &Instance, cat: &VariableCatalog, opts: ModelOptions) -> Vec<CostDefinition> {
    let c = &inst.costs;
    let v = |k: VarKey| cat.expect(k);
    let (e_sum, g_sum) = (v(VarKey::SourceEsum), v(VarKey::SourceGsum));
    let mut out = vec![
        (CostTerm::Energy, "enconpur", vec![(e_sum, c.alpha_p_e), (g_sum, c.alpha_p_g)]),
        (
            CostTerm::Tax,
            "encontax",
            vec![(e_sum, c.beta_e), (v(VarKey::ChpEsum), c.beta_e * c.t_adv), (g_sum, c.beta_g)],
        ),
        (
            CostTerm::Allocation,
            "allocos",
            vec![(v(VarKey::SourceEmax), c.alpha_a_e), (v(VarKey::SourceGmax), c.alpha_a_g)],
        ),
    ];
    let mut grid = Vec::new();
    for k in 0..inst.arc_count() {
        if opts.pipe_sizing {
            let cat_g = inst.pipe_catalog.as_ref().expect("catalog checked");
            let len = inst.network.arcs[k].length_m;
            for (t, ty) in cat_g.types.iter().enumerate() {
                grid.push((v(VarKey::PipeType(k, t)), ty.zeta_per_m * len));
            }
        } else {
            grid.push((v(VarKey::PipeBuilt(k)), inst.arcs[k].zeta_g.expect("zeta_g checked")));
        }
    }
    out.push((CostTerm::Grid, "gridcosts", grid));
    if opts.cable_sizing {
        let cat_e = inst.cable_catalog.as_ref().expect("catalog checked");
        let mut grid_e = Vec::new();
        for k in 0..inst.arc_count() {
            let len = inst.network.arcs[k].length_m;
            for (t, ty) in cat_e.types.iter().enumerate() {
                grid_e.push((v(VarKey::CableType(k, t)), ty.zeta_per_m * len));
            }
        }
        out.push((CostTerm::GridElectric, "cabletype", grid_e));
    }
    let mut tech = Vec::new();
    let mut renov = Vec::new();
    for k in inst.heat_arcs() {
        let shl = inst.demand(k).shl;
        for t in Tech::ALL {
            tech.push((v(VarKey::Tech(k, t)), c.gamma(t)));
            renov.push((v(VarKey::Reno1(k, t)), shl * c.nu1));
            renov.push((v(VarKey::Reno2(k, t)), shl * c.nu2));
        }
    }
    out.push((CostTerm::Tech, "techcosts", tech));
    out.push((CostTerm::Renovation, "renocosts", renov));
    out
}

/// Cost definitions, the self-produced electricity row, and the emission
/// rows. Returns the rows and the objective, which sums the cost variables.
pub fn emit_objective_and_emission(
    inst: &Instance,
    cat: &VariableCatalog,
    opts: ModelOptions,
) -> (Vec<ConstraintRow>, Vec<(VarId, f64)>) {
    let mut s = Sink::new(inst, cat);
    let c = &inst.costs;
    let mut chp = vec![(s.v(VarKey::ChpEsum), 1.0)];
    for k in inst.heat_arcs() {
        let d = inst.demand(k);
        let gap = d.sel - d.chp.sel;
        chp.extend(discounted(&s, k, Tech::Chp, gap, gap));
    }
    s.push("encontax_chp".into(), "encontax", chp, Sense::Eq, 0.0);

    let mut objective = Vec::new();
    for (term, tag, def) in cost_definitions(inst, cat, opts) {
        let cv = s.v(VarKey::Cost(term));
        let mut terms = vec![(cv, 1.0)];
        terms.extend(def.into_iter().map(|(v, coef)| (v, -coef)));
        s.push(term.name().to_string(), tag, terms, Sense::Eq, 0.0);
        objective.push((cv, 1.0));
    }

    let em = s.v(VarKey::Emission);
    s.push(
        "carbon".into(),
        "carbon",
        vec![(em, 1.0), (s.v(VarKey::SourceEsum), -c.kappa_e), (s.v(VarKey::SourceGsum), -c.kappa_g)],
        Sense::Eq,
        0.0,
    );
    s.push("carbontar".into(), "carbontar", vec![(em, 1.0)], Sense::Le, c.e_target);
    (s.rows, objective)
}
