//! Annual costs and emissions of a concrete plan.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formulation::{CostTerm, PlanPoint, VarKey};
use crate::instance::{Instance, ModelOptions, Tech};
use crate::physics::FlowState;
use crate::plan::{arc_loads, PlanDecisions};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    #[serde(rename = "C_energy")]
    pub energy: f64,
    #[serde(rename = "C_tax")]
    pub tax: f64,
    #[serde(rename = "C_allocation")]
    pub allocation: f64,
    /// Gas grid.
    #[serde(rename = "C_grid")]
    pub grid: f64,
    /// Electric grid; present only when cables are sized.
    #[serde(rename = "C_grid_e", default, skip_serializing_if = "Option::is_none")]
    pub grid_electric: Option<f64>,
    #[serde(rename = "C_tech")]
    pub tech: f64,
    #[serde(rename = "C_renov")]
    pub renovation: f64,
    /// kg/a.
    #[serde(rename = "E_carbon")]
    pub emission: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn term(&self, t: CostTerm) -> Option<f64> {
        match t {
            CostTerm::Energy => Some(self.energy),
            CostTerm::Tax => Some(self.tax),
            CostTerm::Allocation => Some(self.allocation),
            CostTerm::Grid => Some(self.grid),
            CostTerm::GridElectric => self.grid_electric,
            CostTerm::Tech => Some(self.tech),
            CostTerm::Renovation => Some(self.renovation),
        }
    }

    /// Aligned two-column table of the cost items, total and emission.
    pub fn table(&self) -> String {
        let mut rows: Vec<(String, f64)> = Vec::new();
        for t in CostTerm::ALL {
            if let Some(v) = self.term(t) {
                rows.push((t.name().to_string(), v));
            }
        }
        rows.push(("total".into(), self.total));
        let mut out = String::new();
        for (name, v) in rows {
            out.push_str(&format!("{name:<14} {v:>16.2} €/a\n"));
        }
        out.push_str(&format!("{:<14} {:>16.2} kg/a\n", "E_carbon", self.emission));
        out
    }
}

impl fmt::Display for CostBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("plan point has no value for {0}")]
    Missing(String),
}

/// Everything the cost items depend on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostInputs {
    pub s0_esum: f64,
    pub s0_gsum: f64,
    pub s0_emax: f64,
    pub s0_gmax: f64,
    pub chp_esum: f64,
    /// Per arc: technology indicator values indexed by [`Tech::index`].
    pub tech: Vec<[f64; 3]>,
    /// Per arc: summed first- and second-stage renovation levels.
    pub reno: Vec<(f64, f64)>,
    pub pipe: Vec<f64>,
    /// Per arc and catalog type, when sized.
    pub pipe_type: Vec<Vec<f64>>,
    pub cable_type: Vec<Vec<f64>>,
}

impl CostInputs {
    /// Reads the inputs from a plan point by variable name.
    pub fn from_point(inst: &Instance, options: ModelOptions, pt: &PlanPoint) -> Result<Self, CostError> {
        let net = &inst.network;
        let get = |key: VarKey| {
            let name = key.name(net);
            pt.get(&name).ok_or(CostError::Missing(name))
        };
        let opt = |key: VarKey| pt.get(&key.name(net)).unwrap_or(0.0);
        let mut inp = CostInputs {
            s0_esum: get(VarKey::SourceEsum)?,
            s0_gsum: get(VarKey::SourceGsum)?,
            s0_emax: get(VarKey::SourceEmax)?,
            s0_gmax: get(VarKey::SourceGmax)?,
            chp_esum: get(VarKey::ChpEsum)?,
            ..Default::default()
        };
        for k in 0..inst.arc_count() {
            let heat = inst.demand(k).has_heat();
            let mut tech = [0.0; 3];
            let (mut r1, mut r2) = (0.0, 0.0);
            for t in Tech::ALL {
                if heat {
                    tech[t.index()] = get(VarKey::Tech(k, t))?;
                    r1 += get(VarKey::Reno1(k, t))?;
                    r2 += get(VarKey::Reno2(k, t))?;
                } else {
                    tech[t.index()] = opt(VarKey::Tech(k, t));
                }
            }
            inp.tech.push(tech);
            inp.reno.push((r1, r2));
            inp.pipe.push(get(VarKey::PipeBuilt(k))?);
            let types = |n: usize, key: fn(usize, usize) -> VarKey| -> Result<Vec<f64>, CostError> {
                (0..n).map(|c| get(key(k, c))).collect()
            };
            if options.pipe_sizing {
                let n = inst.pipe_catalog.as_ref().map_or(0, |c| c.types.len());
                inp.pipe_type.push(types(n, VarKey::PipeType)?);
            }
            if options.cable_sizing {
                let n = inst.cable_catalog.as_ref().map_or(0, |c| c.types.len());
                inp.cable_type.push(types(n, VarKey::CableType)?);
            }
        }
        Ok(inp)
    }

    /// Inputs of a plan with its converged flows.
    pub fn from_plan(inst: &Instance, options: ModelOptions, d: &PlanDecisions, state: &FlowState) -> Self {
        let mut inp = CostInputs {
            s0_emax: state.source_electric_peak(inst),
            s0_gmax: state.source_gas_peak(inst),
            ..Default::default()
        };
        for (k, a) in d.arcs.iter().enumerate() {
            let loads = arc_loads(inst, k, a);
            inp.s0_esum += loads.esum;
            inp.s0_gsum += loads.gsum;
            inp.chp_esum += loads.chp_esum;
            let mut tech = [0.0; 3];
            if let Some(t) = a.tech {
                tech[t.index()] = 1.0;
            }
            inp.tech.push(tech);
            inp.reno.push((a.reno1, a.reno2));
            inp.pipe.push(if a.pipe { 1.0 } else { 0.0 });
            let one_hot =
                |n: usize, pick: Option<usize>| (0..n).map(|c| if pick == Some(c) { 1.0 } else { 0.0 }).collect();
            if options.pipe_sizing {
                let n = inst.pipe_catalog.as_ref().map_or(0, |c| c.types.len());
                inp.pipe_type.push(one_hot(n, a.pipe_type.filter(|_| a.pipe)));
            }
            if options.cable_sizing {
                let n = inst.cable_catalog.as_ref().map_or(0, |c| c.types.len());
                inp.cable_type.push(one_hot(n, a.cable_type));
            }
        }
        inp
    }
}

/// Evaluates every cost item from its inputs.
pub fn costs_of(inst: &Instance, options: ModelOptions, inp: &CostInputs) -> CostBreakdown {
    let c = &inst.costs;
    let energy = c.alpha_p_e * inp.s0_esum + c.alpha_p_g * inp.s0_gsum;
    let tax = c.beta_e * (inp.s0_esum + c.t_adv * inp.chp_esum) + c.beta_g * inp.s0_gsum;
    let allocation = c.alpha_a_e * inp.s0_emax + c.alpha_a_g * inp.s0_gmax;
    let mut grid = 0.0;
    let mut grid_electric = options.cable_sizing.then_some(0.0);
    let mut tech = 0.0;
    let mut renovation = 0.0;
    for k in 0..inst.arc_count() {
        let len = inst.network.arcs[k].length_m;
        if options.pipe_sizing {
            let types = &inst.pipe_catalog.as_ref().expect("pipe catalog").types;
            grid += types.iter().zip(&inp.pipe_type[k]).map(|(t, y)| t.zeta_per_m * len * y).sum::<f64>();
        } else {
            grid += inst.arcs[k].zeta_g.unwrap_or(0.0) * inp.pipe[k];
        }
        if let Some(ge) = grid_electric.as_mut() {
            let types = &inst.cable_catalog.as_ref().expect("cable catalog").types;
            *ge += types.iter().zip(&inp.cable_type[k]).map(|(t, y)| t.zeta_per_m * len * y).sum::<f64>();
        }
        if inst.demand(k).has_heat() {
            tech += Tech::ALL.iter().map(|&t| c.gamma(t) * inp.tech[k][t.index()]).sum::<f64>();
            let shl = inst.demand(k).shl;
            renovation += shl * (c.nu1 * inp.reno[k].0 + c.nu2 * inp.reno[k].1);
        }
    }
    let total = energy + tax + allocation + grid + grid_electric.unwrap_or(0.0) + tech + renovation;
    CostBreakdown {
        energy,
        tax,
        allocation,
        grid,
        grid_electric,
        tech,
        renovation,
        emission: emission_of(inst, inp.s0_esum, inp.s0_gsum),
        total,
    }
}

pub fn cost_breakdown(inst: &Instance, options: ModelOptions, pt: &PlanPoint) -> Result<CostBreakdown, CostError> {
    Ok(costs_of(inst, options, &CostInputs::from_point(inst, options, pt)?))
}

pub fn plan_costs(inst: &Instance, options: ModelOptions, d: &PlanDecisions, state: &FlowState) -> CostBreakdown {
    costs_of(inst, options, &CostInputs::from_plan(inst, options, d, state))
}

pub fn emission_of(inst: &Instance, s0_esum: f64, s0_gsum: f64) -> f64 {
    inst.costs.kappa_e * s0_esum + inst.costs.kappa_g * s0_gsum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionCheck {
    pub emission: f64,
    pub target: f64,
    pub within_target: bool,
}

/// Emission of a plan point and its comparison with the target, inclusive.
pub fn emission(inst: &Instance, pt: &PlanPoint) -> Result<EmissionCheck, CostError> {
    let net = &inst.network;
    let get = |key: VarKey| {
        let name = key.name(net);
        pt.get(&name).ok_or(CostError::Missing(name))
    };
    let e = emission_of(inst, get(VarKey::SourceEsum)?, get(VarKey::SourceGsum)?);
    Ok(EmissionCheck { emission: e, target: inst.costs.e_target, within_target: e <= inst.costs.e_target })
}

/// Lowest emission any plan can reach: every heat arc takes its cleanest
/// technology and renovation vertex. Emission is linear in the renovation
/// levels, so a vertex of `{(0,0), (1,0), (1,1)}` attains the minimum.
pub fn emission_floor(inst: &Instance) -> f64 {
    let mut total = 0.0;
    for k in 0..inst.arc_count() {
        let d = inst.demand(k);
        if !d.has_heat() {
            total += emission_of(inst, d.sel, 0.0);
            continue;
        }
        let mut best = f64::INFINITY;
        for t in Tech::ALL {
            for (r1, r2) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)] {
                let a = crate::plan::ArcDecision {
                    tech: Some(t),
                    reno1: r1,
                    reno2: r2,
                    pipe: t.uses_gas(),
                    ..Default::default()
                };
                let l = arc_loads(inst, k, &a);
                best = best.min(emission_of(inst, l.esum, l.gsum));
            }
        }
        total += best;
    }
    total
}
