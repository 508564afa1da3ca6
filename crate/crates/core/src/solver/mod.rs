//! Spatial branch-and-bound over the formulation.
//!
//! Nodes are boxes over the formulation variables. Each node is bounded by
//! the LP of its linear relaxation, tightened by a few rounds of tangents
//! at the LP point, and gets an incumbent attempt by rounding the LP point
//! and solving the physics exactly. Branching splits a fractional binary
//! first, otherwise the factor of the most violated envelope.

mod branch;
mod incumbent;
mod oracle;

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::costing::{emission_floor, CostBreakdown};
use crate::formulation::{build_formulation, Formulation, FormulationError, PlanPoint, VarId};
use crate::instance::{Instance, ModelOptions};
use crate::lp::{solve_lp, LpOptions, LpStatus};
use crate::physics::{FlowState, PhysicsOptions};
use crate::plan::PlanDecisions;
use crate::relaxation::{relax, ColumnOrigin, RelaxOptions, VarBox};

pub use branch::{branch, BranchDecision, Branching};
pub use incumbent::{evaluate_plan, incumbent_from_point, round_point, snap, Candidate, EMISSION_TOL};
pub use oracle::{enumerate_exact, OracleError, OracleReport, ORACLE_LIMIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Relative optimality gap at which a node is pruned.
    pub gap_tol: f64,
    pub node_limit: usize,
    pub time_limit_s: Option<f64>,
    /// Worker threads; 1 gives a deterministic search.
    pub threads: usize,
    /// Restricts renovation levels to these points; they are then branched
    /// on like binaries.
    pub renovation_grid: Option<Vec<f64>>,
    /// Tangent refinement rounds per node.
    pub tangent_rounds: usize,
    /// Initial tangents per square.
    pub n_tangents: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            node_limit: 1_000_000,
            time_limit_s: None,
            threads: 1,
            renovation_grid: None,
            tangent_rounds: 3,
            n_tangents: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped by a limit with an incumbent; see `gap`.
    Feasible,
    Infeasible,
    EmissionInfeasible,
    /// Stopped by a limit before any incumbent was found.
    NodeLimit,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Feasible => "feasible",
            Self::Infeasible => "infeasible",
            Self::EmissionInfeasible => "emission-infeasible",
            Self::NodeLimit => "node-limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Limit {
    Nodes,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// `+∞` once the problem is proven infeasible.
    #[serde(with = "extended_real")]
    pub lower_bound: f64,
    /// Relative gap `(objective − lower_bound) / |objective|`.
    pub gap: Option<f64>,
    pub root_bound: Option<f64>,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<Limit>,
    pub decisions: Option<PlanDecisions>,
    pub costs: Option<CostBreakdown>,
    pub flow: Option<FlowState>,
    pub point: Option<PlanPoint>,
    pub options: ModelOptions,
    pub config: SolveConfig,
}

impl SolveResult {
    /// Technology per arc of the incumbent, `None` on arcs without heat.
    pub fn technologies(&self) -> Option<Vec<Option<crate::instance::Tech>>> {
        self.decisions.as_ref().map(|d| d.arcs.iter().map(|a| a.tech).collect())
    }
}

/// JSON has no infinities; they are written as `"inf"` and `"-inf"`.
mod extended_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            f64::INFINITY => s.serialize_str("inf"),
            f64::NEG_INFINITY => s.serialize_str("-inf"),
            v => s.serialize_f64(v),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(de::Error::invalid_value(de::Unexpected::Str(&t), &"a number, \"inf\" or \"-inf\"")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone)]
struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    bound: f64,
    depth: usize,
    tangents: Vec<(VarId, f64)>,
}

/// Cap on tangent points inherited from ancestors.
const MAX_INHERITED_TANGENTS: usize = 64;

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, u64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

enum Outcome {
    Infeasible,
    /// Bound reached the cutoff.
    Pruned {
        bound: f64,
    },
    /// Nothing left to split; the bound stays as a floor of the search.
    Exhausted {
        bound: f64,
    },
    Branched {
        bound: f64,
        children: [Node; 2],
    },
}

struct Processed {
    outcome: Outcome,
    candidate: Option<Candidate>,
    lp_iterations: usize,
}

struct Search<'a> {
    f: &'a Formulation,
    inst: &'a Instance,
    cfg: &'a SolveConfig,
    lp: LpOptions,
    physics: PhysicsOptions,
    branching: Branching,
}

impl Search<'_> {
    fn cutoff(&self, incumbent: Option<f64>) -> f64 {
        incumbent.map_or(f64::INFINITY, |v| v - self.cfg.gap_tol * v.abs())
    }

    fn process(
        &self,
        node: &Node,
        incumbent: Option<f64>,
        cache: &mut HashMap<String, Option<Candidate>>,
    ) -> Processed {
        let mut iters = 0;
        let bx = VarBox { lo: node.lo.clone(), hi: node.hi.clone() };
        let ropts =
            RelaxOptions { n_tangents: self.cfg.n_tangents, loss_cuts: true, extra_tangents: node.tangents.clone() };
        let Ok(mut r) = relax(self.f, &bx, &ropts) else {
            return Processed { outcome: Outcome::Infeasible, candidate: None, lp_iterations: 0 };
        };
        if r.empty_box {
            return Processed { outcome: Outcome::Infeasible, candidate: None, lp_iterations: 0 };
        }
        let mut cutoff = self.cutoff(incumbent);
        let mut bound = node.bound;
        let mut point: Option<Vec<f64>> = None;
        let mut new_tangents: Vec<(VarId, f64)> = Vec::new();
        for round in 0..=self.cfg.tangent_rounds {
            let sol = match solve_lp(&r.to_lp::<f64>(), &self.lp) {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("node at depth {}: LP failed ({e}); keeping the parent bound", node.depth);
                    break;
                }
            };
            iters += sol.iterations;
            if sol.status == LpStatus::Infeasible {
                return Processed { outcome: Outcome::Infeasible, candidate: None, lp_iterations: iters };
            }
            if sol.status != LpStatus::Optimal {
                log::warn!("node at depth {}: LP status {:?}; keeping the parent bound", node.depth, sol.status);
                break;
            }
            bound = bound.max(sol.dual_bound);
            let x = sol.x;
            if bound >= cutoff || round == self.cfg.tangent_rounds {
                point = Some(x);
                break;
            }
            let mut added = 0;
            for c in r.model_vars()..r.columns.len() {
                if let ColumnOrigin::Square { v } = r.columns[c].origin {
                    let gap = x[v] * x[v] - x[c];
                    if gap > 1e-9 * (1.0 + x[v] * x[v]) && r.add_tangent(v, x[v]) {
                        new_tangents.push((v, x[v]));
                        added += 1;
                    }
                }
            }
            point = Some(x);
            if added == 0 {
                break;
            }
        }
        if bound >= cutoff {
            return Processed { outcome: Outcome::Pruned { bound }, candidate: None, lp_iterations: iters };
        }

        let mut candidate = None;
        if let Some(x) = &point {
            let d = round_point(self.f, self.inst, r.model_point(x), self.cfg.renovation_grid.as_deref());
            let key = format!("{d:?}");
            let found = cache.entry(key).or_insert_with(|| evaluate_plan(self.f, self.inst, &d, &self.physics)).clone();
            if let Some(c) = found {
                if incumbent.is_none_or(|v| c.objective < v) {
                    cutoff = self.cutoff(Some(c.objective));
                    candidate = Some(c);
                }
            }
        }
        if bound >= cutoff {
            return Processed { outcome: Outcome::Pruned { bound }, candidate, lp_iterations: iters };
        }

        let decision = match &point {
            Some(x) => self.branching.choose(&r, &node.lo, &node.hi, x),
            None => self.branching.fallback(&node.lo, &node.hi),
        };
        let outcome = match decision {
            None => Outcome::Exhausted { bound },
            Some(b) => {
                let mut tangents = node.tangents.clone();
                tangents.extend(new_tangents);
                if tangents.len() > MAX_INHERITED_TANGENTS {
                    tangents.drain(..tangents.len() - MAX_INHERITED_TANGENTS);
                }
                let children = branch(&node.lo, &node.hi, b).map(|(lo, hi)| Node {
                    lo,
                    hi,
                    bound,
                    depth: node.depth + 1,
                    tangents: tangents.clone(),
                });
                Outcome::Branched { bound, children }
            }
        };
        Processed { outcome, candidate, lp_iterations: iters }
    }
}

struct Shared {
    queue: BinaryHeap<Reverse<(Key, usize)>>,
    nodes: Vec<Option<Node>>,
    seq: u64,
    active: usize,
    processed: usize,
    lp_iterations: usize,
    incumbent: Option<Candidate>,
    /// Smallest bound among nodes closed without proof of being worse than
    /// the cutoff in force at the end.
    floor: f64,
    root_bound: Option<f64>,
    limit: Option<Limit>,
}

impl Shared {
    fn push(&mut self, node: Node) {
        let key = Key(node.bound, self.seq);
        self.seq += 1;
        self.nodes.push(Some(node));
        self.queue.push(Reverse((key, self.nodes.len() - 1)));
    }

    fn best_open(&self) -> f64 {
        self.queue.peek().map_or(f64::INFINITY, |Reverse((k, _))| k.0)
    }
}

fn check_config(cfg: &SolveConfig) -> Result<(), SolveError> {
    if !(cfg.gap_tol >= 0.0 && cfg.gap_tol.is_finite()) {
        return Err(SolveError::Config("gap_tol must be finite and ≥ 0".into()));
    }
    if cfg.threads == 0 {
        return Err(SolveError::Config("threads must be ≥ 1".into()));
    }
    if let Some(g) = &cfg.renovation_grid {
        if g.is_empty() || g.iter().any(|v| !(0.0..=1.0).contains(v)) || !g.contains(&0.0) {
            return Err(SolveError::Config("renovation grid needs points in [0, 1] including 0".into()));
        }
    }
    Ok(())
}

/// Solves the model of `inst` under `options`.
pub fn solve(inst: &Instance, options: ModelOptions, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    check_config(cfg)?;
    let report = inst.validate();
    if !report.is_valid() {
        return Err(SolveError::Invalid(report.to_string()));
    }
    let f = build_formulation(inst, options)?;
    let mut grid = cfg.renovation_grid.clone();
    if let Some(g) = grid.as_mut() {
        g.sort_by(f64::total_cmp);
        g.dedup();
    }
    let cfg_sorted = SolveConfig { renovation_grid: grid, ..cfg.clone() };
    let cfg = &cfg_sorted;
    let finish = |status: SolveStatus, sh: &Shared| -> SolveResult {
        let inc = sh.incumbent.as_ref();
        let objective = inc.map(|c| c.objective);
        let mut lower = sh.floor.min(sh.best_open());
        if let Some(v) = objective {
            lower = lower.min(v);
        }
        if status == SolveStatus::Infeasible || status == SolveStatus::EmissionInfeasible {
            lower = f64::INFINITY;
        }
        let gap = objective.map(|v| ((v - lower) / v.abs().max(1e-12)).max(0.0));
        SolveResult {
            status,
            objective,
            lower_bound: lower,
            gap,
            root_bound: sh.root_bound,
            nodes: sh.processed,
            lp_iterations: sh.lp_iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
            limit: sh.limit,
            decisions: inc.map(|c| c.decisions.clone()),
            costs: inc.map(|c| c.costs),
            flow: inc.map(|c| c.flow.clone()),
            point: inc.map(|c| f.point(&c.x)),
            options,
            config: cfg.clone(),
        }
    };

    let mut shared = Shared {
        queue: BinaryHeap::new(),
        nodes: Vec::new(),
        seq: 0,
        active: 0,
        processed: 0,
        lp_iterations: 0,
        incumbent: None,
        floor: f64::INFINITY,
        root_bound: None,
        limit: None,
    };
    let floor = emission_floor(inst);
    if floor > inst.costs.e_target {
        log::info!("emission floor {floor} exceeds the target {}", inst.costs.e_target);
        return Ok(finish(SolveStatus::EmissionInfeasible, &shared));
    }

    let search = Search {
        f: &f,
        inst,
        cfg,
        lp: LpOptions::default(),
        physics: PhysicsOptions::default(),
        branching: Branching::new(&f, cfg.renovation_grid.clone()),
    };
    let root_box = VarBox::of(&f);
    shared.push(Node { lo: root_box.lo, hi: root_box.hi, bound: f64::NEG_INFINITY, depth: 0, tangents: Vec::new() });

    let state = Mutex::new(shared);
    let wake = Condvar::new();
    let time_up = || cfg.time_limit_s.is_some_and(|t| start.elapsed().as_secs_f64() >= t);
    let worker = || {
        let mut cache: HashMap<String, Option<Candidate>> = HashMap::new();
        loop {
            let (node, incumbent) = {
                let mut sh = state.lock().unwrap();
                loop {
                    if sh.limit.is_some() {
                        return;
                    }
                    let cutoff = search.cutoff(sh.incumbent.as_ref().map(|c| c.objective));
                    // Nodes whose bound already reaches the cutoff are closed.
                    while sh.best_open() >= cutoff && !sh.queue.is_empty() {
                        let Reverse((k, id)) = sh.queue.pop().unwrap();
                        sh.nodes[id] = None;
                        sh.floor = sh.floor.min(k.0);
                    }
                    if !sh.queue.is_empty() {
                        if sh.processed >= cfg.node_limit {
                            sh.limit = Some(Limit::Nodes);
                            wake.notify_all();
                            return;
                        }
                        if time_up() {
                            sh.limit = Some(Limit::Time);
                            wake.notify_all();
                            return;
                        }
                        let Reverse((_, id)) = sh.queue.pop().unwrap();
                        let node = sh.nodes[id].take().unwrap();
                        sh.active += 1;
                        sh.processed += 1;
                        break (node, sh.incumbent.as_ref().map(|c| c.objective));
                    }
                    if sh.active == 0 {
                        wake.notify_all();
                        return;
                    }
                    sh = wake.wait(sh).unwrap();
                }
            };
            let out = search.process(&node, incumbent, &mut cache);
            let mut sh = state.lock().unwrap();
            sh.active -= 1;
            sh.lp_iterations += out.lp_iterations;
            if let Some(c) = out.candidate {
                if sh.incumbent.as_ref().is_none_or(|i| c.objective < i.objective) {
                    log::debug!("incumbent {} at node {}", c.objective, sh.processed);
                    sh.incumbent = Some(c);
                }
            }
            if node.depth == 0 {
                sh.root_bound = match out.outcome {
                    Outcome::Infeasible => None,
                    Outcome::Pruned { bound } | Outcome::Exhausted { bound } | Outcome::Branched { bound, .. } => {
                        Some(bound)
                    }
                };
            }
            match out.outcome {
                Outcome::Infeasible => {}
                Outcome::Pruned { bound } => sh.floor = sh.floor.min(bound),
                Outcome::Exhausted { bound } => {
                    if sh.incumbent.is_none() {
                        log::warn!("leaf at depth {} is exact to tolerance but its rounding failed", node.depth);
                    }
                    sh.floor = sh.floor.min(bound);
                }
                Outcome::Branched { children, .. } => {
                    for c in children {
                        sh.push(c);
                    }
                }
            }
            wake.notify_all();
        }
    };
    if cfg.threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..cfg.threads {
                s.spawn(worker);
            }
        });
    }
    let sh = state.into_inner().unwrap();
    let status = match (&sh.incumbent, sh.limit) {
        (Some(_), _) => SolveStatus::Feasible,
        (None, Some(_)) => SolveStatus::NodeLimit,
        (None, None) => SolveStatus::Infeasible,
    };
    let mut result = finish(status, &sh);
    // Exhausted leaves may hold the bound below the cutoff, so optimality is
    // read off the final gap rather than from an empty queue.
    if status == SolveStatus::Feasible && result.gap.is_some_and(|g| g <= cfg.gap_tol * (1.0 + 1e-9)) {
        result.status = SolveStatus::Optimal;
    }
    log::info!(
        "solve: {} objective {:?} bound {} nodes {} in {:.3}s",
        result.status.label(),
        result.objective,
        result.lower_bound,
        result.nodes,
        result.wall_time_s
    );
    Ok(result)
}
