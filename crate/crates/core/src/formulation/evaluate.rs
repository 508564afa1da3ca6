//! Full variable assignments and their residual check.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Formulation;

/// Value of every model variable, keyed by variable name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlanPoint {
    pub values: BTreeMap<String, f64>,
}

impl PlanPoint {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no value for variable {0}")]
    Missing(String),
}

impl Formulation {
    /// Dense value vector in catalog order.
    pub fn vector(&self, pt: &PlanPoint) -> Result<Vec<f64>, EvalError> {
        self.catalog.vars().iter().map(|v| pt.get(&v.name).ok_or_else(|| EvalError::Missing(v.name.clone()))).collect()
    }

    pub fn point(&self, x: &[f64]) -> PlanPoint {
        let values = self.catalog.vars().iter().zip(x).map(|(v, &val)| (v.name.clone(), val)).collect();
        PlanPoint { values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowViolation {
    pub id: String,
    pub tag: String,
    /// Signed `lhs − rhs`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub name: String,
    pub value: f64,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralityViolation {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    pub rows: Vec<RowViolation>,
    pub bounds: Vec<BoundViolation>,
    pub integrality: Vec<IntegralityViolation>,
    /// Largest row violation, including those within tolerance.
    pub max_row_violation: f64,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.bounds.is_empty() && self.integrality.is_empty()
    }

    pub fn row(&self, id: &str) -> Option<&RowViolation> {
        self.rows.iter().find(|r| r.id == id)
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "no violations (max row violation {:e})", self.max_row_violation);
        }
        for r in &self.rows {
            writeln!(f, "row {} [{}]: residual {:e}", r.id, r.tag, r.residual)?;
        }
        for b in &self.bounds {
            writeln!(f, "bound {}: {} outside [{}, {}]", b.name, b.value, b.lb, b.ub)?;
        }
        for i in &self.integrality {
            writeln!(f, "integrality {}: {}", i.name, i.value)?;
        }
        Ok(())
    }
}

impl Formulation {
    pub fn violations(&self, x: &[f64], tol: f64) -> ViolationReport {
        let mut rep = ViolationReport::default();
        for row in &self.rows {
            let viol = row.violation(x);
            rep.max_row_violation = rep.max_row_violation.max(viol);
            if viol > tol {
                rep.rows.push(RowViolation { id: row.id.clone(), tag: row.tag.to_string(), residual: row.residual(x) });
            }
        }
        for (var, &val) in self.catalog.vars().iter().zip(x) {
            if val < var.lb - tol || val > var.ub + tol || !val.is_finite() {
                rep.bounds.push(BoundViolation { name: var.name.clone(), value: val, lb: var.lb, ub: var.ub });
            }
            if var.is_binary() && (val - val.round()).abs() > tol {
                rep.integrality.push(IntegralityViolation { name: var.name.clone(), value: val });
            }
        }
        rep
    }
}

/// Checks every row, bound and integrality requirement at `pt`. Equality
/// rows count as violated when `|residual| > tol`, inequalities when they
/// miss their side by more than `tol`. Conditional rows are checked only
/// when their indicator is 1.
pub fn evaluate_residuals(f: &Formulation, pt: &PlanPoint, tol: f64) -> Result<ViolationReport, EvalError> {
    let x = f.vector(pt)?;
    Ok(f.violations(&x, tol))
}
