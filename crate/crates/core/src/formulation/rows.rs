//! Typed constraint rows.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::VarId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    LinearEq,
    LinearIneq,
    BilinearEq,
    QuadraticIneq,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::LinearEq => "linear-eq",
            RowKind::LinearIneq => "linear-ineq",
            RowKind::BilinearEq => "bilinear-eq",
            RowKind::QuadraticIneq => "quadratic-ineq",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Eq => "=",
            Sense::Le => "<=",
            Sense::Ge => ">=",
        })
    }
}

/// The single nonlinear term a row may carry, added to the linear part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinear {
    /// `coef · a · b`
    Product { a: VarId, b: VarId, coef: f64 },
    /// `coef · v²`
    Square { v: VarId, coef: f64 },
}

impl Nonlinear {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Nonlinear::Product { a, b, coef } => coef * x[a] * x[b],
            Nonlinear::Square { v, coef } => coef * x[v] * x[v],
        }
    }

    pub fn vars(&self) -> [VarId; 2] {
        match *self {
            Nonlinear::Product { a, b, .. } => [a, b],
            Nonlinear::Square { v, .. } => [v, v],
        }
    }
}

/// `Σ terms + nonlinear  <sense>  rhs`, optionally enforced only when a
/// binary indicator is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub id: String,
    /// Model equation family the row belongs to.
    pub tag: &'static str,
    pub kind: RowKind,
    pub terms: Vec<(VarId, f64)>,
    pub nonlinear: Option<Nonlinear>,
    pub sense: Sense,
    pub rhs: f64,
    pub active_when: Option<VarId>,
}

impl ConstraintRow {
    pub fn linear(id: String, tag: &'static str, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        let kind = if sense == Sense::Eq { RowKind::LinearEq } else { RowKind::LinearIneq };
        let terms = terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
        Self { id, tag, kind, terms, nonlinear: None, sense, rhs, active_when: None }
    }

    pub fn with_nonlinear(mut self, nl: Nonlinear) -> Self {
        self.kind = match nl {
            Nonlinear::Product { .. } => {
                debug_assert_eq!(self.sense, Sense::Eq);
                RowKind::BilinearEq
            }
            Nonlinear::Square { .. } => {
                debug_assert_ne!(self.sense, Sense::Eq);
                RowKind::QuadraticIneq
            }
        };
        self.nonlinear = Some(nl);
        self
    }

    pub fn when(mut self, indicator: VarId) -> Self {
        self.active_when = Some(indicator);
        self
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinear.is_none()
    }

    /// Value of the left-hand side at `x`.
    pub fn lhs(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.terms.iter().map(|&(v, c)| c * x[v]).sum();
        lin + self.nonlinear.map_or(0.0, |nl| nl.eval(x))
    }

    /// Signed residual `lhs − rhs`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.lhs(x) - self.rhs
    }

    /// Amount by which the row is violated, zero when satisfied or inactive.
    pub fn violation(&self, x: &[f64]) -> f64 {
        if !self.is_active(x) {
            return 0.0;
        }
        let r = self.residual(x);
        match self.sense {
            Sense::Eq => r.abs(),
            Sense::Le => r.max(0.0),
            Sense::Ge => (-r).max(0.0),
        }
    }

    pub fn is_active(&self, x: &[f64]) -> bool {
        self.active_when.is_none_or(|v| x[v] > 0.5)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        let nl = self.nonlinear.map(|n| n.vars()).into_iter().flatten();
        self.terms.iter().map(|&(v, _)| v).chain(nl).chain(self.active_when)
    }
}
