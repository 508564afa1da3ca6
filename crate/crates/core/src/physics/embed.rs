//! Converged states written as values of every formulation variable.

use crate::formulation::{Formulation, PlanPoint, Sense, VarKey};
use crate::instance::{Instance, Tech};
use crate::plan::{arc_loads, PlanDecisions};

use super::FlowState;

/// Full variable vector for `f` at the plan `d` with flows `state`.
///
/// Variables fixed by decisions or physics are set directly; source totals,
/// emission and cost items are then solved from their defining rows.
pub fn embed(f: &Formulation, inst: &Instance, d: &PlanDecisions, state: &FlowState) -> Vec<f64> {
    let mut x: Vec<f64> = f.catalog.vars().iter().map(|v| v.lb.max(0.0).min(v.ub)).collect();
    let mut set = |key: VarKey, value: f64| {
        if let Some(v) = f.id(key) {
            x[v] = value;
        }
    };
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    for (k, a) in d.arcs.iter().enumerate() {
        let loads = arc_loads(inst, k, a);
        for t in Tech::ALL {
            let on = a.tech == Some(t);
            set(VarKey::Tech(k, t), ind(on));
            set(VarKey::Reno1(k, t), if on { a.reno1 } else { 0.0 });
            set(VarKey::Reno2(k, t), if on { a.reno2 } else { 0.0 });
            set(VarKey::RenoDone(k, t), ind(on && a.reno1 >= 1.0));
            set(VarKey::TechEsum(k, t), if on { loads.esum } else { 0.0 });
            set(VarKey::TechEmax(k, t), if on { loads.emax } else { 0.0 });
        }
        set(VarKey::PipeBuilt(k), ind(a.pipe));
        if let Some(cat) = &inst.cable_catalog {
            for c in 0..cat.types.len() {
                set(VarKey::CableType(k, c), ind(a.cable_type == Some(c)));
            }
        }
        if let Some(cat) = &inst.pipe_catalog {
            for c in 0..cat.types.len() {
                set(VarKey::PipeType(k, c), ind(a.pipe && a.pipe_type == Some(c)));
            }
        }
        set(VarKey::Esum(k), loads.esum);
        set(VarKey::Emax(k), loads.emax);
        set(VarKey::Gsum(k), loads.gsum);
        set(VarKey::Gmax(k), loads.gmax);

        let (i, j) = inst.endpoints(k);
        let dp = state.p[i] - state.p[j];
        let forward = if state.f_g[k] != 0.0 { state.f_g[k] > 0.0 } else { dp >= 0.0 };
        set(VarKey::FlowPos(k), ind(forward));
        set(VarKey::FlowNeg(k), ind(!forward));
        set(VarKey::ElecIn(k), state.f_e_in[k]);
        set(VarKey::ElecOut(k), state.f_e_out[k]);
        set(VarKey::GasFlow(k), state.f_g[k]);
        set(VarKey::GasVolume(k), state.q_bar[k]);
        set(VarKey::PressureLoss(k), dp);
        set(VarKey::PressureLossAbs(k), dp.abs());
        set(VarKey::VoltageDrop(k), state.u[i] - state.u[j]);
    }
    for i in 0..inst.node_count() {
        set(VarKey::Potential(i), state.u[i]);
        set(VarKey::Pressure(i), state.p[i]);
        set(VarKey::NodeEmax(i), state.peaks.electric[i]);
        set(VarKey::NodeGmax(i), state.peaks.gas[i]);
    }

    let defined = [
        ("injconst_e", VarKey::SourceEsum),
        ("injconst_g", VarKey::SourceGsum),
        ("elecbalansource", VarKey::SourceEmax),
        ("gasbalansource", VarKey::SourceGmax),
        ("encontax_chp", VarKey::ChpEsum),
        ("carbon", VarKey::Emission),
    ];
    for (row, key) in defined {
        solve_for(f, row, key, &mut x);
    }
    for term in crate::formulation::CostTerm::ALL {
        if f.row(term.name()).is_some() {
            solve_for(f, term.name(), VarKey::Cost(term), &mut x);
        }
    }
    x
}

/// Sets `key` so that the equality row `row_id` holds.
fn solve_for(f: &Formulation, row_id: &str, key: VarKey, x: &mut [f64]) {
    let (Some(row), Some(v)) = (f.row(row_id), f.id(key)) else { return };
    debug_assert!(row.is_linear() && row.sense == Sense::Eq);
    let (mut coef, mut rest) = (0.0, 0.0);
    for &(w, c) in &row.terms {
        if w == v {
            coef += c;
        } else {
            rest += c * x[w];
        }
    }
    x[v] = (row.rhs - rest) / coef;
}

pub fn plan_point(f: &Formulation, inst: &Instance, d: &PlanDecisions, state: &FlowState) -> PlanPoint {
    f.point(&embed(f, inst, d, state))
}
