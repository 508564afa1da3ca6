//! Variable catalog: every model variable with a stable name and a finite box.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, ModelOptions, Network, Tech};

pub type VarId = usize;

/// Semantic identity of a model variable. Arc and node payloads are indices
/// into the instance network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKey {
    Tech(usize, Tech),
    Reno1(usize, Tech),
    Reno2(usize, Tech),
    RenoDone(usize, Tech),
    PipeBuilt(usize),
    FlowPos(usize),
    FlowNeg(usize),
    CableType(usize, usize),
    PipeType(usize, usize),
    Esum(usize),
    Emax(usize),
    Gsum(usize),
    Gmax(usize),
    TechEsum(usize, Tech),
    TechEmax(usize, Tech),
    ElecIn(usize),
    ElecOut(usize),
    GasFlow(usize),
    GasVolume(usize),
    PressureLoss(usize),
    PressureLossAbs(usize),
    VoltageDrop(usize),
    Potential(usize),
    Pressure(usize),
    NodeEmax(usize),
    NodeGmax(usize),
    SourceEsum,
    SourceGsum,
    SourceEmax,
    SourceGmax,
    ChpEsum,
    Emission,
    Cost(CostTerm),
}

/// Itemized objective terms, each held in its own variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CostTerm {
    Energy,
    Tax,
    Allocation,
    Grid,
    GridElectric,
    Tech,
    Renovation,
}

impl CostTerm {
    pub const ALL: [CostTerm; 7] = [
        CostTerm::Energy,
        CostTerm::Tax,
        CostTerm::Allocation,
        CostTerm::Grid,
        CostTerm::GridElectric,
        CostTerm::Tech,
        CostTerm::Renovation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostTerm::Energy => "C_energy",
            CostTerm::Tax => "C_tax",
            CostTerm::Allocation => "C_allocation",
            CostTerm::Grid => "C_grid",
            CostTerm::GridElectric => "C_grid_e",
            CostTerm::Tech => "C_tech",
            CostTerm::Renovation => "C_renov",
        }
    }
}

impl VarKey {
    pub fn name(&self, net: &Network) -> String {
        let arc = |k: usize| {
            let a = &net.arcs[k];
            format!("{},{}", a.from, a.to)
        };
        match *self {
            VarKey::Tech(k, t) => format!("x_{}[{}]", t.label(), arc(k)),
            VarKey::Reno1(k, t) => format!("x1_{}[{}]", t.label(), arc(k)),
            VarKey::Reno2(k, t) => format!("x2_{}[{}]", t.label(), arc(k)),
            VarKey::RenoDone(k, t) => format!("z_{}[{}]", t.label(), arc(k)),
            VarKey::PipeBuilt(k) => format!("y_g[{}]", arc(k)),
            VarKey::FlowPos(k) => format!("y_plus[{}]", arc(k)),
            VarKey::FlowNeg(k) => format!("y_minus[{}]", arc(k)),
            VarKey::CableType(k, c) => format!("y_e[{};{c}]", arc(k)),
            VarKey::PipeType(k, c) => format!("y_gk[{};{c}]", arc(k)),
            VarKey::Esum(k) => format!("s_Esum[{}]", arc(k)),
            VarKey::Emax(k) => format!("s_Emax[{}]", arc(k)),
            VarKey::Gsum(k) => format!("s_Gsum[{}]", arc(k)),
            VarKey::Gmax(k) => format!("s_Gmax[{}]", arc(k)),
            VarKey::TechEsum(k, t) => format!("s_Esum_{}[{}]", t.label(), arc(k)),
            VarKey::TechEmax(k, t) => format!("s_Emax_{}[{}]", t.label(), arc(k)),
            VarKey::ElecIn(k) => format!("f_e_in[{}]", arc(k)),
            VarKey::ElecOut(k) => format!("f_e_out[{}]", arc(k)),
            VarKey::GasFlow(k) => format!("f_g[{}]", arc(k)),
            VarKey::GasVolume(k) => format!("q_bar[{}]", arc(k)),
            VarKey::PressureLoss(k) => format!("p_bar[{}]", arc(k)),
            VarKey::PressureLossAbs(k) => format!("p_bar_plus[{}]", arc(k)),
            VarKey::VoltageDrop(k) => format!("u_bar[{}]", arc(k)),
            VarKey::Potential(i) => format!("u[{i}]"),
            VarKey::Pressure(i) => format!("p[{i}]"),
            VarKey::NodeEmax(i) => format!("sbar_Emax[{i}]"),
            VarKey::NodeGmax(i) => format!("sbar_Gmax[{i}]"),
            VarKey::SourceEsum => "s0_Esum".into(),
            VarKey::SourceGsum => "s0_Gsum".into(),
            VarKey::SourceEmax => "s0_Emax".into(),
            VarKey::SourceGmax => "s0_Gmax".into(),
            VarKey::ChpEsum => "s_chp_Esum".into(),
            VarKey::Emission => "E_carbon".into(),
            VarKey::Cost(c) => c.name().into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub key: VarKey,
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }

    pub fn is_fixed(&self) -> bool {
        self.lb == self.ub
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariableCatalog {
    vars: Vec<Variable>,
    index: HashMap<VarKey, VarId>,
}

impl VariableCatalog {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id]
    }

    pub fn id(&self, key: VarKey) -> Option<VarId> {
        self.index.get(&key).copied()
    }

    /// Id of a variable the model guarantees to exist.
    pub fn expect(&self, key: VarKey) -> VarId {
        match self.id(key) {
            Some(id) => id,
            None => panic!("variable {key:?} not in catalog"),
        }
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().enumerate().filter(|(_, v)| v.is_binary()).map(|(k, _)| k)
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.lb).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.ub).collect()
    }

    pub(crate) fn add(&mut self, net: &Network, key: VarKey, kind: VarKind, lb: f64, ub: f64) -> VarId {
        debug_assert!(lb <= ub && lb.is_finite() && ub.is_finite(), "{key:?}: [{lb}, {ub}]");
        let id = self.vars.len();
        self.vars.push(Variable { key, name: key.name(net), kind, lb, ub });
        let prev = self.index.insert(key, id);
        debug_assert!(prev.is_none(), "duplicate variable {key:?}");
        id
    }
}

/// Largest value each arc load can take over all technologies and
/// renovation levels.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct LoadCaps {
    pub esum: f64,
    pub emax: f64,
    pub gsum: f64,
    pub gmax: f64,
}

pub(crate) fn load_caps(inst: &Instance, arc: usize) -> LoadCaps {
    let d = inst.demand(arc);
    if !d.has_heat() {
        return LoadCaps { esum: d.sel, emax: d.mel, gsum: 0.0, gmax: 0.0 };
    }
    let mut c = LoadCaps::default();
    for t in Tech::ALL {
        let l = d.tech(t);
        c.esum = c.esum.max(l.sel.max(d.sel));
        c.emax = c.emax.max(l.mel.max(d.mel));
        if t.uses_gas() {
            c.gsum = c.gsum.max(l.sgl);
            c.gmax = c.gmax.max(l.mgl);
        }
    }
    c
}

/// Smallest resistance any cable on `arc` may have under `opts`.
pub(crate) fn min_cable_resistance(inst: &Instance, arc: usize, opts: ModelOptions) -> f64 {
    if opts.cable_sizing {
        let cat = inst.cable_catalog.as_ref().expect("catalog checked by caller");
        (0..cat.types.len()).filter_map(|k| inst.cable_resistance(arc, Some(k))).fold(f64::INFINITY, f64::min)
    } else {
        inst.arcs[arc].r_e.expect("R_e checked by caller")
    }
}

pub(crate) fn min_pipe_resistance(inst: &Instance, arc: usize, opts: ModelOptions) -> f64 {
    if opts.pipe_sizing {
        let cat = inst.pipe_catalog.as_ref().expect("catalog checked by caller");
        (0..cat.types.len()).filter_map(|k| inst.pipe_resistance(arc, Some(k))).fold(f64::INFINITY, f64::min)
    } else {
        inst.arcs[arc].r_g.expect("R_g checked by caller")
    }
}

/// Builds the catalog with the tightest static boxes implied by the
/// instance parameters.
pub(crate) fn build_catalog(inst: &Instance, opts: ModelOptions) -> VariableCatalog {
    use VarKind::{Binary, Continuous};
    let net = &inst.network;
    let ph = &inst.physical;
    let mut cat = VariableCatalog::default();
    let caps: Vec<LoadCaps> = (0..inst.arc_count()).map(|k| load_caps(inst, k)).collect();

    for k in 0..inst.arc_count() {
        let heat = inst.demand(k).has_heat();
        let on = if heat { 1.0 } else { 0.0 };
        for t in Tech::ALL {
            cat.add(net, VarKey::Tech(k, t), Binary, 0.0, on);
        }
        if heat {
            for t in Tech::ALL {
                cat.add(net, VarKey::Reno1(k, t), Continuous, 0.0, 1.0);
                cat.add(net, VarKey::Reno2(k, t), Continuous, 0.0, 1.0);
                cat.add(net, VarKey::RenoDone(k, t), Binary, 0.0, 1.0);
            }
        }
        cat.add(net, VarKey::PipeBuilt(k), Binary, 0.0, 1.0);
        cat.add(net, VarKey::FlowPos(k), Binary, 0.0, 1.0);
        cat.add(net, VarKey::FlowNeg(k), Binary, 0.0, 1.0);
        if opts.cable_sizing {
            let types = inst.cable_catalog.as_ref().map_or(0, |c| c.types.len());
            for c in 0..types {
                cat.add(net, VarKey::CableType(k, c), Binary, 0.0, 1.0);
            }
        }
        if opts.pipe_sizing {
            let types = inst.pipe_catalog.as_ref().map_or(0, |c| c.types.len());
            for c in 0..types {
                cat.add(net, VarKey::PipeType(k, c), Binary, 0.0, 1.0);
            }
        }

        let cap = caps[k];
        cat.add(net, VarKey::Esum(k), Continuous, 0.0, cap.esum);
        cat.add(net, VarKey::Emax(k), Continuous, 0.0, cap.emax);
        cat.add(net, VarKey::Gsum(k), Continuous, 0.0, cap.gsum);
        cat.add(net, VarKey::Gmax(k), Continuous, 0.0, cap.gmax);
        if heat {
            let d = inst.demand(k);
            for t in Tech::ALL {
                let l = d.tech(t);
                cat.add(net, VarKey::TechEsum(k, t), Continuous, 0.0, l.sel.max(d.sel));
                cat.add(net, VarKey::TechEmax(k, t), Continuous, 0.0, l.mel.max(d.mel));
            }
        }

        let du = ph.du_max();
        let f_e = ph.a_e * ph.u_max * du / min_cable_resistance(inst, k, opts);
        cat.add(net, VarKey::ElecIn(k), Continuous, -f_e, f_e);
        cat.add(net, VarKey::ElecOut(k), Continuous, -f_e, f_e);
        let dp = ph.dp_max();
        let f_g = ph.gas_flow_cap().min(ph.a_g * (dp / min_pipe_resistance(inst, k, opts)).sqrt());
        cat.add(net, VarKey::GasFlow(k), Continuous, -f_g, f_g);
        cat.add(net, VarKey::GasVolume(k), Continuous, ph.q_min(), ph.q_max);
        cat.add(net, VarKey::PressureLoss(k), Continuous, ph.dp_min(), dp);
        cat.add(net, VarKey::PressureLossAbs(k), Continuous, 0.0, dp);
        cat.add(net, VarKey::VoltageDrop(k), Continuous, -du, du);
    }

    let mut node_e = vec![0.0; inst.node_count()];
    let mut node_g = vec![0.0; inst.node_count()];
    for (k, a) in net.arcs.iter().enumerate() {
        for v in [a.from, a.to] {
            node_e[v] += 0.5 * caps[k].emax;
            node_g[v] += 0.5 * caps[k].gmax;
        }
    }
    for i in 0..inst.node_count() {
        let (u_lo, p_lo) = if i == 0 { (ph.u_max, ph.p_max) } else { (ph.u_min, ph.p_min) };
        cat.add(net, VarKey::Potential(i), Continuous, u_lo, ph.u_max);
        cat.add(net, VarKey::Pressure(i), Continuous, p_lo, ph.p_max);
        cat.add(net, VarKey::NodeEmax(i), Continuous, 0.0, node_e[i]);
        cat.add(net, VarKey::NodeGmax(i), Continuous, 0.0, node_g[i]);
    }

    let total = |f: fn(&LoadCaps) -> f64| caps.iter().map(f).sum::<f64>();
    cat.add(net, VarKey::SourceEsum, Continuous, 0.0, total(|c| c.esum));
    cat.add(net, VarKey::SourceGsum, Continuous, 0.0, total(|c| c.gsum));
    // Source injection covers its own half-demands plus every flow leaving it.
    let source_arcs: Vec<usize> = net.incoming(0).chain(net.outgoing(0)).collect();
    let out_e: f64 = source_arcs.iter().map(|&k| cat.var(cat.expect(VarKey::ElecOut(k))).ub).sum();
    let out_g: f64 = source_arcs.iter().map(|&k| cat.var(cat.expect(VarKey::GasFlow(k))).ub).sum();
    cat.add(net, VarKey::SourceEmax, Continuous, 0.0, node_e[0] + out_e);
    cat.add(net, VarKey::SourceGmax, Continuous, 0.0, node_g[0] + out_g);
    let chp_gap: f64 = inst
        .heat_arcs()
        .map(|k| {
            let d = inst.demand(k);
            (d.sel - d.chp.sel).max(0.0)
        })
        .sum();
    cat.add(net, VarKey::ChpEsum, Continuous, 0.0, chp_gap);
    let c = &inst.costs;
    let e_cap = c.kappa_e * total(|c| c.esum) + c.kappa_g * total(|c| c.gsum);
    cat.add(net, VarKey::Emission, Continuous, 0.0, e_cap);
    cat
}
