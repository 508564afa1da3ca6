//! Plans rounded from relaxation points and checked on exact physics.

use crate::costing::{plan_costs, CostBreakdown};
use crate::formulation::{Formulation, VarKey};
use crate::instance::{Instance, Tech};
use crate::physics::{check_feasibility, embed, FlowState, PhysicsOptions};
use crate::plan::{ArcDecision, PlanDecisions};

/// An operable plan with its exact flows and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub objective: f64,
    pub decisions: PlanDecisions,
    pub costs: CostBreakdown,
    pub flow: FlowState,
    /// Full formulation vector.
    pub x: Vec<f64>,
}

/// Nearest point of `grid` to `v`.
pub fn snap(grid: &[f64], v: f64) -> f64 {
    grid.iter()
        .copied()
        .fold(f64::NAN, |best, g| if best.is_nan() || (g - v).abs() < (best - v).abs() { g } else { best })
}

/// Rounds a relaxation point to plan decisions.
///
/// Technologies by argmax, renovation clamped to its ordering rules (and to
/// `grid` when given), pipes where the point has them at ½ or more or a gas
/// technology needs them, then the cheapest missing pipes that connect every
/// gas user to the source.
pub fn round_point(f: &Formulation, inst: &Instance, x: &[f64], grid: Option<&[f64]>) -> PlanDecisions {
    let val = |key: VarKey| f.id(key).map_or(0.0, |v| x[v]);
    let mut arcs = Vec::with_capacity(inst.arc_count());
    for k in 0..inst.arc_count() {
        let mut a = ArcDecision::default();
        if inst.demand(k).has_heat() {
            let t = Tech::ALL
                .into_iter()
                .fold((Tech::Cb, f64::NEG_INFINITY), |best, t| {
                    let v = val(VarKey::Tech(k, t));
                    if v > best.1 {
                        (t, v)
                    } else {
                        best
                    }
                })
                .0;
            a.tech = Some(t);
            let mut r1 = val(VarKey::Reno1(k, t)).clamp(0.0, 1.0);
            let mut r2 = val(VarKey::Reno2(k, t)).clamp(0.0, 1.0);
            if let Some(g) = grid {
                r1 = snap(g, r1);
                r2 = snap(g, r2);
            }
            if r1 > 1.0 - 1e-9 {
                r1 = 1.0;
            }
            if r1 < 1.0 {
                r2 = 0.0;
            }
            if r2 < 1e-12 {
                r2 = 0.0;
            }
            a.reno1 = if r1 < 1e-12 { 0.0 } else { r1 };
            a.reno2 = r2.min(a.reno1);
            a.pipe = t.uses_gas();
        }
        a.pipe |= val(VarKey::PipeBuilt(k)) >= 0.5;
        if let Some(cat) = &inst.cable_catalog {
            if f.options.cable_sizing {
                a.cable_type = argmax((0..cat.types.len()).map(|c| val(VarKey::CableType(k, c))));
            }
        }
        arcs.push(a);
    }
    connect_gas_users(f, inst, x, &mut arcs);
    if let Some(cat) = &inst.pipe_catalog {
        if f.options.pipe_sizing {
            for (k, a) in arcs.iter_mut().enumerate() {
                if a.pipe {
                    a.pipe_type = argmax((0..cat.types.len()).map(|c| val(VarKey::PipeType(k, c))));
                }
            }
        }
    }
    PlanDecisions { arcs }
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    values
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// Adds pipes so that every endpoint of a gas-using arc reaches the source,
/// choosing paths by Dijkstra with the pipe cost discounted by the point's
/// pipe value as arc weight.
fn connect_gas_users(f: &Formulation, inst: &Instance, x: &[f64], arcs: &mut [ArcDecision]) {
    let net = &inst.network;
    let n = inst.node_count();
    let mut users = vec![false; n];
    for (k, a) in arcs.iter().enumerate() {
        if a.tech.is_some_and(Tech::uses_gas) {
            let (i, j) = inst.endpoints(k);
            users[i] = true;
            users[j] = true;
        }
    }
    let adj = net.adjacency();
    loop {
        let reach = net.reachable_from_source(|k| arcs[k].pipe);
        let Some(target) = (0..n).find(|&v| users[v] && !reach[v]) else { return };
        let weight = |k: usize| {
            if arcs[k].pipe {
                return 0.0;
            }
            let y = f.id(VarKey::PipeBuilt(k)).map_or(0.0, |v| x[v]);
            let zeta = inst.arcs[k].zeta_g.unwrap_or(1.0);
            zeta * (1.0 - y).max(0.0) + 1e-9
        };
        // Dijkstra from the whole reachable set.
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![None; n];
        let mut done = vec![false; n];
        for v in 0..n {
            if reach[v] {
                dist[v] = 0.0;
            }
        }
        while let Some(v) =
            (0..n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
        {
            done[v] = true;
            if v == target {
                break;
            }
            for &(w, k) in &adj[v] {
                let d = dist[v] + weight(k);
                if d < dist[w] {
                    dist[w] = d;
                    via[w] = Some((v, k));
                }
            }
        }
        let mut v = target;
        let mut added = false;
        while let Some((u, k)) = via[v] {
            if !arcs[k].pipe {
                arcs[k].pipe = true;
                added = true;
            }
            v = u;
        }
        if !added {
            // Disconnected graph; physics will report it.
            return;
        }
    }
}

/// Relative slack on the emission cap when accepting a plan.
pub const EMISSION_TOL: f64 = 1e-9;

/// Exact evaluation of decisions: physics, bounds, emission cap.
pub fn evaluate_plan(
    f: &Formulation,
    inst: &Instance,
    d: &PlanDecisions,
    physics: &PhysicsOptions,
) -> Option<Candidate> {
    let rep = check_feasibility(inst, d, physics);
    if !rep.is_feasible() {
        return None;
    }
    let flow = rep.state?;
    let costs = plan_costs(inst, f.options, d, &flow);
    // The relaxation meets the cap with equality at tight targets; exact
    // evaluation may land an ulp or so above it.
    let cap = inst.costs.e_target;
    if costs.emission > cap + EMISSION_TOL * cap.abs().max(1.0) {
        return None;
    }
    let x = embed(f, inst, d, &flow);
    Some(Candidate { objective: costs.total, decisions: d.clone(), costs, flow, x })
}

/// Rounds `lp_point` and keeps the plan when it is operable and within the
/// emission cap.
pub fn incumbent_from_point(
    f: &Formulation,
    inst: &Instance,
    lp_point: &[f64],
    grid: Option<&[f64]>,
    physics: &PhysicsOptions,
) -> Option<Candidate> {
    evaluate_plan(f, inst, &round_point(f, inst, lp_point, grid), physics)
}
