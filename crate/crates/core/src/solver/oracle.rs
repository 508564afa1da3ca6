//! Exhaustive reference solver for small trees.

use crate::formulation::{build_formulation, FormulationError, PlanPoint};
use crate::instance::{Instance, ModelOptions, Tech};
use crate::physics::PhysicsOptions;
use crate::plan::{ArcDecision, PlanDecisions};

use std::time::Instant;

use super::incumbent::{evaluate_plan, Candidate};
use super::{SolveConfig, SolveResult, SolveStatus};

/// Largest number of plans the oracle will enumerate.
pub const ORACLE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("the oracle needs a tree network")]
    NotTree,
    #[error("{count:.0} plans exceed the enumeration limit of {ORACLE_LIMIT:.0}")]
    TooLarge { count: f64 },
    #[error("renovation grid needs points in [0, 1] including 0")]
    BadGrid,
    #[error(transparent)]
    Formulation(#[from] FormulationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub best: Option<Candidate>,
    /// Plans enumerated.
    pub candidates: usize,
    /// Plans that are operable and within the emission cap.
    pub feasible: usize,
    /// Best objective among feasible plans whose technology assignment
    /// differs from the optimum.
    pub runner_up: Option<f64>,
    /// Formulation point of the optimum.
    pub point: Option<PlanPoint>,
    pub options: ModelOptions,
    pub wall_time_s: f64,
}

impl OracleReport {
    /// Relative margin of the optimum over the best plan with other
    /// technologies; infinite when there is none.
    pub fn margin(&self) -> f64 {
        match (&self.best, self.runner_up) {
            (Some(b), Some(r)) => (r - b.objective) / b.objective.abs().max(1e-12),
            _ => f64::INFINITY,
        }
    }

    /// The optimum as a solve result with a zero gap.
    pub fn into_result(self) -> SolveResult {
        let objective = self.best.as_ref().map(|b| b.objective);
        SolveResult {
            status: if objective.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            objective,
            lower_bound: objective.unwrap_or(f64::INFINITY),
            gap: objective.map(|_| 0.0),
            root_bound: None,
            nodes: self.candidates,
            lp_iterations: 0,
            wall_time_s: self.wall_time_s,
            limit: None,
            decisions: self.best.as_ref().map(|b| b.decisions.clone()),
            costs: self.best.as_ref().map(|b| b.costs),
            flow: self.best.as_ref().map(|b| b.flow.clone()),
            point: self.point,
            options: self.options,
            config: SolveConfig::default(),
        }
    }
}

/// Renovation pairs `(x1, x2)` on `grid` with `x2 > 0` only at `x1 = 1`.
fn renovation_profiles(grid: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = grid.iter().map(|&r| (r, 0.0)).collect();
    if grid.contains(&1.0) {
        out.extend(grid.iter().filter(|&&r| r > 0.0).map(|&r| (1.0, r)));
    }
    out
}

/// Enumerates every technology, renovation level on `grid` and catalog
/// choice on a tree, building exactly the pipes on the source paths of gas
/// users. Each plan is checked on exact physics.
pub fn enumerate_exact(inst: &Instance, options: ModelOptions, grid: &[f64]) -> Result<OracleReport, OracleError> {
    let start = Instant::now();
    if !inst.is_tree() {
        return Err(OracleError::NotTree);
    }
    if grid.is_empty() || grid.iter().any(|v| !(0.0..=1.0).contains(v)) || !grid.contains(&0.0) {
        return Err(OracleError::BadGrid);
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let heat: Vec<usize> = inst.heat_arcs().collect();
    let m = inst.arc_count();
    let cable_types = match (&inst.cable_catalog, options.cable_sizing) {
        (Some(c), true) => c.types.len(),
        _ => 1,
    };
    let pipe_types = match (&inst.pipe_catalog, options.pipe_sizing) {
        (Some(c), true) => c.types.len(),
        _ => 1,
    };
    let h = heat.len() as f64;
    let g = grid.len() as f64;
    let count =
        3f64.powf(h) * g.powf(2.0 * h) * (cable_types as f64).powi(m as i32) * (pipe_types as f64).powi(m as i32);
    if count > ORACLE_LIMIT {
        return Err(OracleError::TooLarge { count });
    }

    let f = build_formulation(inst, options)?;
    let physics = PhysicsOptions::default();
    let profiles = renovation_profiles(&grid);
    let per_arc: Vec<(Tech, f64, f64)> =
        Tech::ALL.into_iter().flat_map(|t| profiles.iter().map(move |&(r1, r2)| (t, r1, r2))).collect();
    let parents = inst.network.parent_arcs();

    let mut report = OracleReport {
        best: None,
        candidates: 0,
        feasible: 0,
        runner_up: None,
        point: None,
        options,
        wall_time_s: 0.0,
    };
    let mut feasible_plans: Vec<(Vec<Tech>, f64)> = Vec::new();
    let mut choice = vec![0usize; heat.len()];
    loop {
        let mut arcs = vec![ArcDecision::default(); m];
        for (slot, &k) in heat.iter().enumerate() {
            let (t, r1, r2) = per_arc[choice[slot]];
            arcs[k] = ArcDecision { tech: Some(t), reno1: r1, reno2: r2, pipe: t.uses_gas(), ..ArcDecision::default() };
        }
        for k in 0..m {
            if arcs[k].tech.is_some_and(Tech::uses_gas) {
                let (i, j) = inst.endpoints(k);
                for node in [i, j] {
                    for p in inst.network.path_to_source(&parents, node) {
                        arcs[p].pipe = true;
                    }
                }
            }
        }
        let cable_arcs: Vec<usize> = if cable_types > 1 { (0..m).collect() } else { Vec::new() };
        let pipe_arcs: Vec<usize> =
            if pipe_types > 1 { (0..m).filter(|&k| arcs[k].pipe).collect() } else { Vec::new() };
        let mut types = vec![0usize; cable_arcs.len() + pipe_arcs.len()];
        loop {
            let mut plan = PlanDecisions { arcs: arcs.clone() };
            for (s, &k) in cable_arcs.iter().enumerate() {
                plan.arcs[k].cable_type = Some(types[s]);
            }
            for (s, &k) in pipe_arcs.iter().enumerate() {
                plan.arcs[k].pipe_type = Some(types[cable_arcs.len() + s]);
            }
            report.candidates += 1;
            if let Some(c) = evaluate_plan(&f, inst, &plan, &physics) {
                report.feasible += 1;
                let techs = heat.iter().map(|&k| plan.arcs[k].tech.unwrap()).collect();
                feasible_plans.push((techs, c.objective));
                if report.best.as_ref().is_none_or(|b| c.objective < b.objective) {
                    report.best = Some(c);
                }
            }
            let limits = |s: usize| if s < cable_arcs.len() { cable_types } else { pipe_types };
            if !advance(&mut types, limits) {
                break;
            }
        }
        if !advance(&mut choice, |_| per_arc.len()) {
            break;
        }
    }
    if let Some(b) = &report.best {
        let best_techs: Vec<Tech> = heat.iter().map(|&k| b.decisions.arcs[k].tech.unwrap()).collect();
        report.runner_up =
            feasible_plans.iter().filter(|(t, _)| *t != best_techs).map(|&(_, v)| v).min_by(f64::total_cmp);
        report.point = Some(f.point(&b.x));
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Mixed-radix increment; false after the last combination.
fn advance(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for (s, d) in digits.iter_mut().enumerate() {
        *d += 1;
        if *d < radix(s) {
            return true;
        }
        *d = 0;
    }
    false
}
