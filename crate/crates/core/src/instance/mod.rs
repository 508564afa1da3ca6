//! Network instances: topology, per-arc demand tables, physical and cost
//! parameters, plus validation.
//!
//! Arithmetic on instance data is unit-free. Units in field docs are the
//! intended ones; the calorific multipliers `a_e` and `a_g` carry whatever
//! scaling the instance author needs to make them consistent.

mod generate;
mod io;
pub mod samples;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use generate::{generate_instance, GeneratorSpec, Topology};
pub use io::{load_instance, save_instance, InstanceDocument, InstanceError};

/// Micro energy conversion technology installed on an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tech {
    /// Condensing boiler: gas to heat.
    Cb,
    /// Combined heat and power: gas to heat, electricity as by-product.
    Chp,
    /// Heat pump: electricity to heat.
    Hp,
}

impl Tech {
    pub const ALL: [Tech; 3] = [Tech::Cb, Tech::Chp, Tech::Hp];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn uses_gas(self) -> bool {
        matches!(self, Tech::Cb | Tech::Chp)
    }

    pub fn label(self) -> &'static str {
        match self {
            Tech::Cb => "cb",
            Tech::Chp => "chp",
            Tech::Hp => "hp",
        }
    }

    pub fn upper(self) -> &'static str {
        match self {
            Tech::Cb => "CB",
            Tech::Chp => "CHP",
            Tech::Hp => "HP",
        }
    }
}

impl fmt::Display for Tech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.upper())
    }
}

impl std::str::FromStr for Tech {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cb" => Ok(Tech::Cb),
            "chp" => Ok(Tech::Chp),
            "hp" => Ok(Tech::Hp),
            other => Err(format!("unknown technology '{other}'")),
        }
    }
}

/// Yearly and peak loads of an arc when a given technology covers its heat.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TechLoads {
    /// Yearly electricity, kWh/a.
    pub sel: f64,
    /// Peak electricity, kW.
    pub mel: f64,
    /// Yearly gas, kWh/a.
    pub sgl: f64,
    /// Peak gas, kW.
    pub mgl: f64,
}

/// Demand table of one arc (a street with its houses).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArcDemand {
    /// Yearly electricity not used for heating, kWh/a.
    pub sel: f64,
    /// Yearly heat, kWh/a.
    pub shl: f64,
    /// Peak electricity not used for heating, kW.
    pub mel: f64,
    /// Peak heat, kW.
    pub mhl: f64,
    pub cb: TechLoads,
    pub chp: TechLoads,
    pub hp: TechLoads,
}

impl ArcDemand {
    pub fn tech(&self, t: Tech) -> &TechLoads {
        match t {
            Tech::Cb => &self.cb,
            Tech::Chp => &self.chp,
            Tech::Hp => &self.hp,
        }
    }

    pub fn has_heat(&self) -> bool {
        self.shl > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetArc {
    pub from: usize,
    pub to: usize,
    /// Arc length in meters.
    pub length_m: f64,
}

/// Directed, connected graph. Node 0 is the source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub node_count: usize,
    pub arcs: Vec<NetArc>,
}

impl Network {
    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Arc indices ending in `node`.
    pub fn incoming(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().enumerate().filter(move |(_, a)| a.to == node).map(|(k, _)| k)
    }

    /// Arc indices starting in `node`.
    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().enumerate().filter(move |(_, a)| a.from == node).map(|(k, _)| k)
    }

    /// Undirected adjacency: for each node, `(neighbor, arc index)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for (k, a) in self.arcs.iter().enumerate() {
            if a.from < self.node_count && a.to < self.node_count {
                adj[a.from].push((a.to, k));
                adj[a.to].push((a.from, k));
            }
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return false;
        }
        self.reachable_from_source(|_| true).iter().all(|&r| r)
    }

    /// Connected with exactly `n - 1` arcs.
    pub fn is_tree(&self) -> bool {
        self.node_count >= 1 && self.arcs.len() + 1 == self.node_count && self.is_connected()
    }

    /// Nodes reachable from node 0 using only arcs accepted by `usable`,
    /// ignoring arc orientation.
    pub fn reachable_from_source(&self, usable: impl Fn(usize) -> bool) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count];
        if self.node_count == 0 {
            return seen;
        }
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, k) in &adj[v] {
                if !seen[w] && usable(k) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Breadth-first parent arcs from the source; `None` for the source and
    /// for unreachable nodes. On a tree this is the unique path structure.
    pub fn parent_arcs(&self) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut parent = vec![None; self.node_count];
        let mut seen = vec![false; self.node_count];
        if self.node_count == 0 {
            return parent;
        }
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, k) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(k);
                    queue.push_back(w);
                }
            }
        }
        parent
    }

    /// Arcs on the source path of `node` (via [`Network::parent_arcs`]).
    pub fn path_to_source(&self, parents: &[Option<usize>], mut node: usize) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some(k) = parents[node] {
            path.push(k);
            let a = &self.arcs[k];
            node = if a.from == node { a.to } else { a.from };
        }
        path
    }
}

/// Per-arc parameters besides topology.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArcParams {
    pub demand: ArcDemand,
    /// Cable resistance, Ω. Absent when cables are sized from the catalog.
    pub r_e: Option<f64>,
    /// Pipe resistance, mbar/(m³/h)². Absent when pipes are sized from the catalog.
    pub r_g: Option<f64>,
    /// Annualized pipe cost, €/a. Absent when pipes are sized from the catalog.
    pub zeta_g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Source potential, V.
    pub u_max: f64,
    /// Minimal node potential, V.
    pub u_min: f64,
    /// Calorific multiplier of three-phase electric flow.
    pub a_e: f64,
    /// Source gas pressure, mbar.
    pub p_max: f64,
    /// Minimal node pressure, mbar.
    pub p_min: f64,
    /// Calorific multiplier of gas flow.
    pub a_g: f64,
    /// Largest admissible volumetric gas flow magnitude, m³/h.
    pub q_max: f64,
}

impl PhysicalParams {
    pub fn q_min(&self) -> f64 {
        -self.q_max
    }

    /// Largest admissible pressure loss on an arc.
    pub fn dp_max(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn dp_min(&self) -> f64 {
        -self.dp_max()
    }

    pub fn du_max(&self) -> f64 {
        self.u_max - self.u_min
    }

    /// Cap on calorific gas flow implied by the volumetric cap.
    pub fn gas_flow_cap(&self) -> f64 {
        self.a_g * self.q_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Electricity price before tax, €/kWh.
    pub alpha_p_e: f64,
    /// Gas price before tax, €/kWh.
    pub alpha_p_g: f64,
    /// Electricity tax, €/kWh.
    pub beta_e: f64,
    /// Gas tax, €/kWh.
    pub beta_g: f64,
    /// Tax advantage factor on self-produced electricity.
    pub t_adv: f64,
    /// Electricity allocation price, €/(kW·a).
    pub alpha_a_e: f64,
    /// Gas allocation price, €/(kW·a).
    pub alpha_a_g: f64,
    /// Annualized cost per installed technology, €/a, indexed by [`Tech::index`].
    pub gamma: [f64; 3],
    /// First-stage renovation unit cost, €/kWh of yearly heat.
    pub nu1: f64,
    /// Second-stage renovation unit cost, €/kWh of yearly heat.
    pub nu2: f64,
    /// Emission factor of electricity, kg/kWh.
    pub kappa_e: f64,
    /// Emission factor of gas, kg/kWh.
    pub kappa_g: f64,
    /// Emission cap, kg/a.
    pub e_target: f64,
    /// Savings fraction of a completed first stage.
    pub mu1: f64,
    /// Savings fraction of a completed second stage.
    pub mu2: f64,
}

impl CostParams {
    pub fn gamma(&self, t: Tech) -> f64 {
        self.gamma[t.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableType {
    /// Resistance per meter, Ω/m.
    pub r_per_m: f64,
    /// Cost per meter, €/m (annualized).
    pub zeta_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CableCatalog {
    /// Sorted by increasing capacity, i.e. decreasing resistance.
    pub types: Vec<CableType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeType {
    pub diameter_m: f64,
    /// Cost per meter, €/m (annualized).
    pub zeta_per_m: f64,
}

pub const DEFAULT_GAS_DENSITY: f64 = 0.7;
pub const DEFAULT_GAS_VELOCITY: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PipeCatalog {
    /// Gas density, kg/m³.
    pub density: f64,
    /// Gas velocity, m/s.
    pub velocity: f64,
    /// Sorted by increasing diameter.
    pub types: Vec<PipeType>,
}

impl Default for PipeCatalog {
    fn default() -> Self {
        Self { density: DEFAULT_GAS_DENSITY, velocity: DEFAULT_GAS_VELOCITY, types: Vec::new() }
    }
}

impl PipeCatalog {
    pub fn resistance(&self, k: usize, length_m: f64) -> f64 {
        pipe_resistance_with(self.types[k].diameter_m, length_m, self.density, self.velocity)
    }
}

/// Darcy friction coefficient `0.3164 / (v ρ d)^0.25`.
pub fn darcy_friction(diameter_m: f64, density: f64, velocity: f64) -> f64 {
    0.3164 / (velocity * density * diameter_m).powf(0.25)
}

/// Pipe resistance `λ 8 ρ l / (π² d⁵)` with the default gas density and velocity.
pub fn pipe_resistance(diameter_m: f64, length_m: f64) -> f64 {
    pipe_resistance_with(diameter_m, length_m, DEFAULT_GAS_DENSITY, DEFAULT_GAS_VELOCITY)
}

pub fn pipe_resistance_with(diameter_m: f64, length_m: f64, density: f64, velocity: f64) -> f64 {
    let lambda = darcy_friction(diameter_m, density, velocity);
    lambda * 8.0 * density * length_m / (std::f64::consts::PI.powi(2) * diameter_m.powi(5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default)]
    pub cable_sizing: bool,
    #[serde(default)]
    pub pipe_sizing: bool,
}

/// Free-form provenance of an instance document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    /// Set when parameter values are made up rather than measured.
    #[serde(default)]
    pub synthetic: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub network: Network,
    /// Indexed like `network.arcs`.
    pub arcs: Vec<ArcParams>,
    pub physical: PhysicalParams,
    pub costs: CostParams,
    pub cable_catalog: Option<CableCatalog>,
    pub pipe_catalog: Option<PipeCatalog>,
    pub options: ModelOptions,
    pub meta: InstanceMeta,
}

impl Instance {
    pub fn node_count(&self) -> usize {
        self.network.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.network.arcs.len()
    }

    pub fn demand(&self, arc: usize) -> &ArcDemand {
        &self.arcs[arc].demand
    }

    pub fn heat_arcs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.arc_count()).filter(move |&k| self.arcs[k].demand.has_heat())
    }

    pub fn is_tree(&self) -> bool {
        self.network.is_tree()
    }

    pub fn endpoints(&self, arc: usize) -> (usize, usize) {
        let a = &self.network.arcs[arc];
        (a.from, a.to)
    }

    /// Cable resistance of `arc` for an optional catalog type.
    pub fn cable_resistance(&self, arc: usize, cable_type: Option<usize>) -> Option<f64> {
        match cable_type {
            Some(k) => {
                let cat = self.cable_catalog.as_ref()?;
                Some(cat.types.get(k)?.r_per_m * self.network.arcs[arc].length_m)
            }
            None => self.arcs[arc].r_e,
        }
    }

    /// Pipe resistance of `arc` for an optional catalog type.
    pub fn pipe_resistance(&self, arc: usize, pipe_type: Option<usize>) -> Option<f64> {
        match pipe_type {
            Some(k) => {
                let cat = self.pipe_catalog.as_ref()?;
                cat.types.get(k)?;
                Some(cat.resistance(k, self.network.arcs[arc].length_m))
            }
            None => self.arcs[arc].r_g,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_instance(self)
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Where: `instance`, `arc (i,j)`, `physical`, `costs`, a catalog name.
    pub scope: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.scope, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }

    fn push(&mut self, scope: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { scope: scope.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Checks every structural, demand and parameter invariant.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let net = &inst.network;

    if net.node_count == 0 {
        rep.push("instance", "network has no nodes (source node 0 missing)");
        return rep;
    }
    if inst.arcs.len() != net.arcs.len() {
        rep.push("instance", "arc parameter count differs from arc count");
        return rep;
    }
    let mut seen = std::collections::HashSet::new();
    for a in &net.arcs {
        let scope = format!("arc ({},{})", a.from, a.to);
        if a.from >= net.node_count || a.to >= net.node_count {
            rep.push(&scope, "endpoint is not a node");
            continue;
        }
        if a.from == a.to {
            rep.push(&scope, "self-loop");
        }
        let key = (a.from.min(a.to), a.from.max(a.to));
        if !seen.insert(key) {
            rep.push(&scope, "duplicate arc");
        }
        if !(a.length_m >= 0.0 && a.length_m.is_finite()) {
            rep.push(&scope, "length_m must be finite and >= 0");
        }
    }
    if !net.is_connected() {
        rep.push("instance", "graph not connected");
    }

    for (k, p) in inst.arcs.iter().enumerate() {
        let a = &net.arcs[k];
        let scope = format!("arc ({},{})", a.from, a.to);
        validate_demand(&p.demand, &scope, &mut rep);
        if inst.options.cable_sizing {
            if p.r_e.is_some() {
                rep.push(&scope, "R_e given while cable_sizing derives it from cable_catalog");
            }
        } else {
            match p.r_e {
                Some(r) if r > 0.0 && r.is_finite() => {}
                Some(_) => rep.push(&scope, "R_e must be > 0"),
                None => rep.push(&scope, "R_e missing"),
            }
        }
        if inst.options.pipe_sizing {
            if p.r_g.is_some() || p.zeta_g.is_some() {
                rep.push(&scope, "R_g/zeta_g given while pipe_sizing derives them from pipe_catalog");
            }
        } else {
            match p.r_g {
                Some(r) if r > 0.0 && r.is_finite() => {}
                Some(_) => rep.push(&scope, "R_g must be > 0"),
                None => rep.push(&scope, "R_g missing"),
            }
            match p.zeta_g {
                Some(z) if z >= 0.0 && z.is_finite() => {}
                Some(_) => rep.push(&scope, "zeta_g must be >= 0"),
                None => rep.push(&scope, "zeta_g missing"),
            }
        }
    }

    let ph = &inst.physical;
    if !(ph.u_max > ph.u_min && ph.u_min >= 0.0) {
        rep.push("physical", "u_max > u_min >= 0 violated");
    }
    if !(ph.p_max > ph.p_min && ph.p_min >= 0.0) {
        rep.push("physical", "p_max > p_min >= 0 violated");
    }
    for (name, v) in [("a_e", ph.a_e), ("a_g", ph.a_g), ("q_max", ph.q_max)] {
        if !(v > 0.0 && v.is_finite()) {
            rep.push("physical", format!("{name} must be > 0"));
        }
    }

    let c = &inst.costs;
    if !(c.mu1 > c.mu2) {
        rep.push("costs", "μ₁ > μ₂ violated");
    }
    if !(c.mu2 > 0.0) {
        rep.push("costs", "μ₂ > 0 violated");
    }
    if !(c.mu1 + c.mu2 <= 1.0) {
        rep.push("costs", "μ₁ + μ₂ ≤ 1 violated");
    }
    if !(c.t_adv > 0.0 && c.t_adv < 1.0) {
        rep.push("costs", "t_adv must lie in (0,1)");
    }
    let prices = [
        ("alpha_p_e", c.alpha_p_e),
        ("alpha_p_g", c.alpha_p_g),
        ("beta_e", c.beta_e),
        ("beta_g", c.beta_g),
        ("alpha_a_e", c.alpha_a_e),
        ("alpha_a_g", c.alpha_a_g),
        ("gamma_cb", c.gamma[0]),
        ("gamma_chp", c.gamma[1]),
        ("gamma_hp", c.gamma[2]),
        ("nu1", c.nu1),
        ("nu2", c.nu2),
        ("kappa_e", c.kappa_e),
        ("kappa_g", c.kappa_g),
        ("e_target", c.e_target),
    ];
    for (name, v) in prices {
        if !(v >= 0.0 && v.is_finite()) {
            rep.push("costs", format!("{name} must be finite and >= 0"));
        }
    }

    if inst.options.cable_sizing && inst.cable_catalog.as_ref().is_none_or(|c| c.types.is_empty()) {
        rep.push("cable_catalog", "cable_sizing enabled without a non-empty cable_catalog");
    }
    if let Some(cat) = &inst.cable_catalog {
        for (k, t) in cat.types.iter().enumerate() {
            if !(t.r_per_m > 0.0 && t.zeta_per_m > 0.0) {
                rep.push("cable_catalog", format!("type {k}: resistance and price must be > 0"));
            }
        }
        if cat.types.windows(2).any(|w| w[1].r_per_m > w[0].r_per_m) {
            rep.push("cable_catalog", "types must be sorted by capacity (decreasing resistance)");
        }
    }
    if inst.options.pipe_sizing && inst.pipe_catalog.as_ref().is_none_or(|c| c.types.is_empty()) {
        rep.push("pipe_catalog", "pipe_sizing enabled without a non-empty pipe_catalog");
    }
    if let Some(cat) = &inst.pipe_catalog {
        if !(cat.density > 0.0 && cat.velocity > 0.0) {
            rep.push("pipe_catalog", "density and velocity must be > 0");
        }
        for (k, t) in cat.types.iter().enumerate() {
            if !(t.diameter_m > 0.0 && t.zeta_per_m > 0.0) {
                rep.push("pipe_catalog", format!("type {k}: diameter and price must be > 0"));
            }
        }
        if cat.types.windows(2).any(|w| w[1].diameter_m < w[0].diameter_m) {
            rep.push("pipe_catalog", "types must be sorted by capacity (increasing diameter)");
        }
    }
    rep
}

fn validate_demand(d: &ArcDemand, scope: &str, rep: &mut ValidationReport) {
    let fields = [
        ("SEL", d.sel),
        ("SHL", d.shl),
        ("MEL", d.mel),
        ("MHL", d.mhl),
        ("SEL_CB", d.cb.sel),
        ("MEL_CB", d.cb.mel),
        ("SGL_CB", d.cb.sgl),
        ("MGL_CB", d.cb.mgl),
        ("SEL_CHP", d.chp.sel),
        ("MEL_CHP", d.chp.mel),
        ("SGL_CHP", d.chp.sgl),
        ("MGL_CHP", d.chp.mgl),
        ("SEL_HP", d.hp.sel),
        ("MEL_HP", d.hp.mel),
        ("SGL_HP", d.hp.sgl),
        ("MGL_HP", d.hp.mgl),
    ];
    for (name, v) in fields {
        if !(v >= 0.0 && v.is_finite()) {
            rep.push(scope, format!("{name} must be finite and >= 0"));
        }
    }
    if !approx_eq(d.cb.sel, d.sel) {
        rep.push(scope, "SEL_CB = SEL violated");
    }
    if !approx_eq(d.cb.mel, d.mel) {
        rep.push(scope, "MEL_CB = MEL violated");
    }
    for (t, l) in [(Tech::Cb, &d.cb), (Tech::Chp, &d.chp)] {
        if l.sgl < d.shl {
            rep.push(scope, format!("SGL_{t} ≥ SHL violated"));
        }
        if l.mgl < d.mhl {
            rep.push(scope, format!("MGL_{t} ≥ MHL violated"));
        }
    }
    if d.hp.sgl != 0.0 {
        rep.push(scope, "SGL_HP must be 0");
    }
    if d.hp.mgl != 0.0 {
        rep.push(scope, "MGL_HP must be 0");
    }
    if d.hp.sel < d.sel {
        rep.push(scope, "SEL_HP ≥ SEL violated");
    }
    if d.hp.mel < d.mel {
        rep.push(scope, "MEL_HP ≥ MEL violated");
    }
    if d.chp.sel > d.sel {
        rep.push(scope, "SEL_CHP ≤ SEL violated");
    }
    if d.chp.mel > d.mel {
        rep.push(scope, "MEL_CHP ≤ MEL violated");
    }
}
