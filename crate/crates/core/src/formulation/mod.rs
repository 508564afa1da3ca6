//! The full mixed-integer nonlinear model of an instance: variable catalog,
//! typed constraint rows and a linear objective.

mod catalog;
mod emit;
mod evaluate;
mod export;
mod rows;

use std::collections::HashSet;

use crate::instance::{Instance, ModelOptions};

pub use catalog::{CostTerm, VarId, VarKey, VarKind, Variable, VariableCatalog};
pub use emit::{
    emit_demand_coupling, emit_electric_flow, emit_gas_flow, emit_objective_and_emission, emit_renovation_constraints,
    emit_technology_constraints,
};
pub use evaluate::{
    evaluate_residuals, BoundViolation, EvalError, IntegralityViolation, PlanPoint, RowViolation, ViolationReport,
};
pub use export::{export_json, export_text, FormulationDocument};
pub use rows::{ConstraintRow, Nonlinear, RowKind, Sense};

/// Equation families every formulation carries.
pub const MODEL_TAGS: &[&str] = &[
    "atmost1MECT",
    "artmove",
    "injconst",
    "installreno",
    "firstsecren",
    "gasrenored",
    "ereno",
    "redelec",
    "sourcevolt",
    "voltbounds",
    "voltdrop",
    "ohmic",
    "elecbalansink",
    "elecbalansource",
    "injectmax",
    "gpsource",
    "gpbounds",
    "pipebuild",
    "gploss",
    "builgaspiperel",
    "gasbalansink",
    "gasbalansource",
    "refgflow",
    "pbarref",
    "DWfinal",
    "enconpur",
    "encontax",
    "allocos",
    "gridcosts",
    "techcosts",
    "renocosts",
    "carbontar",
    "carbon",
];

/// Intermediate forms of the gas law that the sign-free rows replace, with
/// the families that stand in for them.
pub const SUPERSEDED_TAGS: &[(&str, &[&str])] = &[
    ("DWeq", &["refgflow", "pbarref", "DWfinal"]),
    ("newDWeq", &["pbarref", "DWfinal"]),
    ("pbarplace", &["pbarref"]),
    ("DWeqplace", &["DWfinal"]),
];

/// Tag carried by the objective.
pub const OBJECTIVE_TAG: &str = "model";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormulationError {
    #[error("{option} enabled but the {catalog} catalog is missing or empty")]
    MissingCatalog { option: &'static str, catalog: &'static str },
    #[error("arc ({i},{j}): missing {field}")]
    MissingArcParameter { i: usize, j: usize, field: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formulation {
    pub catalog: VariableCatalog,
    pub rows: Vec<ConstraintRow>,
    /// Linear objective over catalog variables, minimized.
    pub objective: Vec<(VarId, f64)>,
    pub options: ModelOptions,
}

impl Formulation {
    pub fn var_count(&self) -> usize {
        self.catalog.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn id(&self, key: VarKey) -> Option<VarId> {
        self.catalog.id(key)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * x[v]).sum()
    }

    pub fn rows_tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a ConstraintRow> + 'a {
        self.rows.iter().filter(move |r| r.tag == tag)
    }

    pub fn row(&self, id: &str) -> Option<&ConstraintRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Model equation families with no emitted row.
    pub fn missing_tags(&self) -> Vec<&'static str> {
        let present: HashSet<&str> = self.rows.iter().map(|r| r.tag).collect();
        let mut missing: Vec<&'static str> = MODEL_TAGS.iter().copied().filter(|t| !present.contains(t)).collect();
        for (old, by) in SUPERSEDED_TAGS {
            if !by.iter().all(|t| present.contains(t)) {
                missing.push(old);
            }
        }
        if self.options.cable_sizing && !present.contains("cabletype") {
            missing.push("cabletype");
        }
        if self.options.pipe_sizing && !present.contains("pipetype") {
            missing.push("pipetype");
        }
        if self.objective.is_empty() {
            missing.push(OBJECTIVE_TAG);
        }
        missing
    }
}

fn check_inputs(inst: &Instance, opts: ModelOptions) -> Result<(), FormulationError> {
    if opts.cable_sizing && inst.cable_catalog.as_ref().is_none_or(|c| c.types.is_empty()) {
        return Err(FormulationError::MissingCatalog { option: "cable_sizing", catalog: "cable" });
    }
    if opts.pipe_sizing && inst.pipe_catalog.as_ref().is_none_or(|c| c.types.is_empty()) {
        return Err(FormulationError::MissingCatalog { option: "pipe_sizing", catalog: "pipe" });
    }
    for (k, a) in inst.arcs.iter().enumerate() {
        let (i, j) = inst.endpoints(k);
        if !opts.cable_sizing && a.r_e.is_none() {
            return Err(FormulationError::MissingArcParameter { i, j, field: "R_e" });
        }
        if !opts.pipe_sizing && a.r_g.is_none() {
            return Err(FormulationError::MissingArcParameter { i, j, field: "R_g" });
        }
        if !opts.pipe_sizing && a.zeta_g.is_none() {
            return Err(FormulationError::MissingArcParameter { i, j, field: "zeta_g" });
        }
    }
    Ok(())
}

/// Builds the model. Row order is fixed by the emitter order, so two calls
/// on the same input give identical formulations.
pub fn build_formulation(inst: &Instance, opts: ModelOptions) -> Result<Formulation, FormulationError> {
    check_inputs(inst, opts)?;
    let mut cat = catalog::build_catalog(inst, opts);
    for (term, _, def) in emit::cost_definitions(inst, &cat, opts) {
        let (mut lo, mut hi) = (0.0, 0.0);
        for (v, c) in def {
            let var = cat.var(v);
            lo += (c * var.lb).min(c * var.ub);
            hi += (c * var.lb).max(c * var.ub);
        }
        cat.add(&inst.network, VarKey::Cost(term), VarKind::Continuous, lo, hi);
    }

    let mut rows = emit_technology_constraints(inst, &cat);
    rows.extend(emit_renovation_constraints(inst, &cat));
    rows.extend(emit_demand_coupling(inst, &cat));
    rows.extend(emit_electric_flow(inst, &cat, opts));
    rows.extend(emit_gas_flow(inst, &cat, opts));
    let (obj_rows, objective) = emit_objective_and_emission(inst, &cat, opts);
    rows.extend(obj_rows);
    debug_assert!({
        let mut seen = HashSet::new();
        rows.iter().all(|r| seen.insert(r.id.as_str()))
    });
    log::debug!("formulation: {} variables, {} rows", cat.len(), rows.len());
    Ok(Formulation { catalog: cat, rows, objective, options: opts })
}
