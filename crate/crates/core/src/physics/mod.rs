//! Steady-state flow on fixed decisions: potentials and cable flows from
//! the Ohmic law, pressures and gas flows from the quadratic pressure-loss
//! law, and the bound checks that decide whether a plan is operable.

mod embed;
mod newton;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::linalg::DenseMatrix;
use crate::plan::{DecisionError, PlanDecisions};

pub use crate::plan::{arc_loads, node_peaks, ArcLoads, NodePeaks};
pub use embed::{embed, plan_point};
pub use newton::{newton, NewtonFailure, NewtonOptions, NewtonOutcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsOptions {
    /// Absolute tolerance on the residual ∞-norm.
    pub tol: f64,
    pub max_iterations: usize,
    /// Tolerance of the operational bound checks.
    pub bound_tol: f64,
}

impl Default for PhysicsOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 100, bound_tol: 1e-9 }
    }
}

impl PhysicsOptions {
    fn newton(&self) -> NewtonOptions {
        NewtonOptions { tol: self.tol, max_iterations: self.max_iterations, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhysicsError {
    #[error(transparent)]
    Decisions(#[from] DecisionError),
    #[error("arc ({i},{j}): no {what} resistance for the chosen type")]
    MissingResistance { i: usize, j: usize, what: &'static str },
    #[error("electric infeasibility: no operating point found ({0})")]
    ElectricInfeasible(NewtonFailure),
    #[error("gas demand at node {node} is not connected to the source by built pipes")]
    DisconnectedGas { node: usize },
    #[error("gas flow did not converge ({0})")]
    GasDiverged(NewtonFailure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricFlow {
    pub u: Vec<f64>,
    pub f_in: Vec<f64>,
    pub f_out: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasFlow {
    pub p: Vec<f64>,
    pub f: Vec<f64>,
    pub q_bar: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Converged state of both networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub f_e_in: Vec<f64>,
    pub f_e_out: Vec<f64>,
    pub f_g: Vec<f64>,
    pub q_bar: Vec<f64>,
    pub electric_residual: f64,
    pub gas_residual: f64,
    pub electric_iterations: usize,
    pub gas_iterations: usize,
    pub peaks: NodePeaks,
}

impl FlowState {
    /// Electric power lost on all cables.
    pub fn electric_losses(&self) -> f64 {
        self.f_e_out.iter().zip(&self.f_e_in).map(|(o, i)| o - i).sum()
    }

    pub fn source_electric_peak(&self, inst: &Instance) -> f64 {
        let net = &inst.network;
        self.peaks.electric[0] + net.outgoing(0).map(|k| self.f_e_out[k]).sum::<f64>()
            - net.incoming(0).map(|k| self.f_e_in[k]).sum::<f64>()
    }

    pub fn source_gas_peak(&self, inst: &Instance) -> f64 {
        let net = &inst.network;
        self.peaks.gas[0] + net.outgoing(0).map(|k| self.f_g[k]).sum::<f64>()
            - net.incoming(0).map(|k| self.f_g[k]).sum::<f64>()
    }
}

fn cable_resistances(inst: &Instance, d: &PlanDecisions) -> Result<Vec<f64>, PhysicsError> {
    (0..inst.arc_count())
        .map(|k| {
            let (i, j) = inst.endpoints(k);
            inst.cable_resistance(k, d.arcs[k].cable_type).ok_or(PhysicsError::MissingResistance {
                i,
                j,
                what: "cable",
            })
        })
        .collect()
}

fn pipe_resistances(inst: &Instance, d: &PlanDecisions) -> Result<Vec<Option<f64>>, PhysicsError> {
    (0..inst.arc_count())
        .map(|k| {
            let a = &d.arcs[k];
            if !a.pipe {
                return Ok(None);
            }
            let (i, j) = inst.endpoints(k);
            inst.pipe_resistance(k, a.pipe_type).map(Some).ok_or(PhysicsError::MissingResistance { i, j, what: "pipe" })
        })
        .collect()
}

/// Solves the electric network for given cable resistances and node peaks,
/// starting from `u = u_max` everywhere.
pub fn solve_electric_with(
    inst: &Instance,
    resistance: &[f64],
    peaks: &[f64],
    opts: &PhysicsOptions,
) -> Result<ElectricFlow, PhysicsError> {
    let n = inst.node_count();
    let ph = inst.physical;
    let arcs = &inst.network.arcs;
    let a_e = ph.a_e;
    // Unknowns are u_1..u_{n-1}; u_0 is pinned at u_max.
    let full = |x: &[f64]| -> Vec<f64> {
        let mut u = vec![ph.u_max; n];
        u[1..].copy_from_slice(x);
        u
    };
    let residual = |x: &[f64]| -> Vec<f64> {
        let u = full(x);
        let mut r: Vec<f64> = peaks[1..].iter().map(|s| -s).collect();
        for (k, a) in arcs.iter().enumerate() {
            let g = a_e / resistance[k];
            let (i, j) = (a.from, a.to);
            // Power into i over this arc is a_e·u_i·(u_j − u_i)/R, and symmetrically.
            if i > 0 {
                r[i - 1] += g * u[i] * (u[j] - u[i]);
            }
            if j > 0 {
                r[j - 1] += g * u[j] * (u[i] - u[j]);
            }
        }
        r
    };
    let jacobian = |x: &[f64]| -> DenseMatrix<f64> {
        let u = full(x);
        let mut jm = DenseMatrix::zeros(n - 1);
        for (k, a) in arcs.iter().enumerate() {
            let g = a_e / resistance[k];
            for (me, other) in [(a.from, a.to), (a.to, a.from)] {
                if me == 0 {
                    continue;
                }
                jm[(me - 1, me - 1)] += g * (u[other] - 2.0 * u[me]);
                if other > 0 {
                    jm[(me - 1, other - 1)] += g * u[me];
                }
            }
        }
        jm
    };
    let admissible = |x: &[f64]| x.iter().all(|&u| u > 0.0);
    let out = if n > 1 {
        newton(&vec![ph.u_max; n - 1], residual, jacobian, admissible, &opts.newton())
            .map_err(PhysicsError::ElectricInfeasible)?
    } else {
        NewtonOutcome { x: Vec::new(), residual: 0.0, iterations: 0 }
    };
    let u = full(&out.x);
    let (mut f_in, mut f_out) = (vec![0.0; arcs.len()], vec![0.0; arcs.len()]);
    for (k, a) in arcs.iter().enumerate() {
        let du = u[a.from] - u[a.to];
        f_in[k] = a_e * u[a.to] * du / resistance[k];
        f_out[k] = a_e * u[a.from] * du / resistance[k];
    }
    Ok(ElectricFlow { u, f_in, f_out, residual: out.residual, iterations: out.iterations })
}

/// Solves the gas network for given pipe resistances (`None`: no pipe) and
/// node peaks, starting from `p = p_max` and zero flow.
///
/// Unknowns are the pressures of nodes reachable from the source through
/// built pipes together with the flows on those pipes; the arc law is used
/// in its quadratic form `a_g²·(p_i − p_j) = R·f·|f|`, which is smooth.
pub fn solve_gas_with(
    inst: &Instance,
    resistance: &[Option<f64>],
    peaks: &[f64],
    opts: &PhysicsOptions,
) -> Result<GasFlow, PhysicsError> {
    let n = inst.node_count();
    let ph = inst.physical;
    let net = &inst.network;
    let reach = net.reachable_from_source(|k| resistance[k].is_some());
    if let Some(node) = (1..n).find(|&i| !reach[i] && peaks[i] > 0.0) {
        return Err(PhysicsError::DisconnectedGas { node });
    }
    // Column layout: pressures of reachable non-source nodes, then pipe flows.
    let mut pcol = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for i in 1..n {
        if reach[i] {
            pcol[i] = nodes.len();
            nodes.push(i);
        }
    }
    let pipes: Vec<usize> =
        (0..net.arcs.len()).filter(|&k| resistance[k].is_some() && reach[net.arcs[k].from]).collect();
    let (np, m) = (nodes.len(), pipes.len());
    let a2 = ph.a_g * ph.a_g;
    let pressure = |x: &[f64], i: usize| if i == 0 { ph.p_max } else { x[pcol[i]] };
    let residual = |x: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; np + m];
        for (row, &i) in nodes.iter().enumerate() {
            r[row] = -peaks[i];
        }
        for (c, &k) in pipes.iter().enumerate() {
            let a = &net.arcs[k];
            let f = x[np + c];
            if a.to > 0 {
                r[pcol[a.to]] += f;
            }
            if a.from > 0 {
                r[pcol[a.from]] -= f;
            }
            let rk = resistance[k].unwrap();
            r[np + c] = a2 * (pressure(x, a.from) - pressure(x, a.to)) - rk * f * f.abs();
        }
        r
    };
    // Flow scale below which the law's derivative is floored, so that
    // undetermined loop flows at a zero start do not make the Jacobian singular.
    let floor = 1e-6 * ph.gas_flow_cap().max(1.0);
    let jacobian = |x: &[f64]| -> DenseMatrix<f64> {
        let mut jm = DenseMatrix::zeros(np + m);
        for (c, &k) in pipes.iter().enumerate() {
            let a = &net.arcs[k];
            let col = np + c;
            if a.to > 0 {
                jm[(pcol[a.to], col)] += 1.0;
            }
            if a.from > 0 {
                jm[(pcol[a.from], col)] -= 1.0;
            }
            if a.from > 0 {
                jm[(col, pcol[a.from])] += a2;
            }
            if a.to > 0 {
                jm[(col, pcol[a.to])] -= a2;
            }
            let rk = resistance[k].unwrap();
            jm[(col, col)] = -2.0 * rk * x[col].abs().max(floor);
        }
        jm
    };
    let mut x0 = vec![ph.p_max; np];
    x0.extend(std::iter::repeat_n(0.0, m));
    let out = if np + m > 0 {
        let nopts = NewtonOptions { full_first_step: true, ..opts.newton() };
        newton(&x0, residual, jacobian, |_| true, &nopts).map_err(PhysicsError::GasDiverged)?
    } else {
        NewtonOutcome { x: Vec::new(), residual: 0.0, iterations: 0 }
    };
    let p: Vec<f64> = (0..n).map(|i| if reach[i] { pressure(&out.x, i) } else { ph.p_max }).collect();
    let mut f = vec![0.0; net.arcs.len()];
    for (c, &k) in pipes.iter().enumerate() {
        f[k] = out.x[np + c];
    }
    let q_bar = f.iter().map(|v| v / ph.a_g).collect();
    Ok(GasFlow { p, f, q_bar, residual: out.residual, iterations: out.iterations })
}

pub fn solve_electric(inst: &Instance, d: &PlanDecisions, opts: &PhysicsOptions) -> Result<ElectricFlow, PhysicsError> {
    d.check(inst)?;
    let (_, peaks) = node_peaks(inst, d);
    solve_electric_with(inst, &cable_resistances(inst, d)?, &peaks.electric, opts)
}

pub fn solve_gas(inst: &Instance, d: &PlanDecisions, opts: &PhysicsOptions) -> Result<GasFlow, PhysicsError> {
    d.check(inst)?;
    let (_, peaks) = node_peaks(inst, d);
    solve_gas_with(inst, &pipe_resistances(inst, d)?, &peaks.gas, opts)
}

/// Solves both networks.
pub fn simulate(inst: &Instance, d: &PlanDecisions, opts: &PhysicsOptions) -> Result<FlowState, PhysicsError> {
    d.check(inst)?;
    let (_, peaks) = node_peaks(inst, d);
    let e = solve_electric_with(inst, &cable_resistances(inst, d)?, &peaks.electric, opts)?;
    let g = solve_gas_with(inst, &pipe_resistances(inst, d)?, &peaks.gas, opts)?;
    Ok(FlowState {
        u: e.u,
        p: g.p,
        f_e_in: e.f_in,
        f_e_out: e.f_out,
        f_g: g.f,
        q_bar: g.q_bar,
        electric_residual: e.residual,
        gas_residual: g.residual,
        electric_iterations: e.iterations,
        gas_iterations: g.iterations,
        peaks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeViolation {
    pub node: usize,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcViolation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Structural problem with the decisions, pipe linkage included.
    pub decisions: Option<String>,
    /// Solver failure, electric infeasibility, or disconnected gas demand.
    pub flow: Option<String>,
    pub low_voltage: Vec<NodeViolation>,
    pub high_voltage: Vec<NodeViolation>,
    pub low_pressure: Vec<NodeViolation>,
    pub high_pressure: Vec<NodeViolation>,
    /// Gas flows above the volumetric cap.
    pub gas_overflow: Vec<ArcViolation>,
    pub state: Option<FlowState>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.decisions.is_none()
            && self.flow.is_none()
            && self.low_voltage.is_empty()
            && self.high_voltage.is_empty()
            && self.low_pressure.is_empty()
            && self.high_pressure.is_empty()
            && self.gas_overflow.is_empty()
    }

    /// One line per problem.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        out.extend(self.decisions.iter().cloned());
        out.extend(self.flow.iter().cloned());
        let node =
            |what: &str, v: &NodeViolation| format!("node {}: {what} {} beyond bound {}", v.node, v.value, v.bound);
        out.extend(self.low_voltage.iter().map(|v| node("potential", v)));
        out.extend(self.high_voltage.iter().map(|v| node("potential", v)));
        out.extend(self.low_pressure.iter().map(|v| node("pressure", v)));
        out.extend(self.high_pressure.iter().map(|v| node("pressure", v)));
        out.extend(
            self.gas_overflow
                .iter()
                .map(|v| format!("arc ({},{}): gas volume flow {} beyond cap {}", v.i, v.j, v.value, v.limit)),
        );
        out
    }
}

/// Runs both solvers and checks every operational bound.
pub fn check_feasibility(inst: &Instance, d: &PlanDecisions, opts: &PhysicsOptions) -> FeasibilityReport {
    let mut rep = FeasibilityReport::default();
    if let Err(e) = d.check(inst) {
        rep.decisions = Some(e.to_string());
        return rep;
    }
    let state = match simulate(inst, d, opts) {
        Ok(s) => s,
        Err(e) => {
            rep.flow = Some(e.to_string());
            return rep;
        }
    };
    let ph = inst.physical;
    let tol = |b: f64| opts.bound_tol * b.abs().max(1.0);
    for (node, &u) in state.u.iter().enumerate() {
        if u < ph.u_min - tol(ph.u_min) {
            rep.low_voltage.push(NodeViolation { node, value: u, bound: ph.u_min });
        }
        if u > ph.u_max + tol(ph.u_max) {
            rep.high_voltage.push(NodeViolation { node, value: u, bound: ph.u_max });
        }
    }
    for (node, &p) in state.p.iter().enumerate() {
        if p < ph.p_min - tol(ph.p_min) {
            rep.low_pressure.push(NodeViolation { node, value: p, bound: ph.p_min });
        }
        if p > ph.p_max + tol(ph.p_max) {
            rep.high_pressure.push(NodeViolation { node, value: p, bound: ph.p_max });
        }
    }
    for (k, &q) in state.q_bar.iter().enumerate() {
        if q.abs() > ph.q_max + tol(ph.q_max) {
            let (i, j) = inst.endpoints(k);
            rep.gas_overflow.push(ArcViolation { i, j, value: q, limit: ph.q_max });
        }
    }
    rep.state = Some(state);
    rep
}
