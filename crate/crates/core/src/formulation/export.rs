//! Plain-text and JSON renderings of a formulation.
//!
//! Text format, one item per line:
//!
//! ```text
//! var <name> <binary|continuous> <lb> <ub>
//! row <id> <kind> <terms> <sense> <rhs> @<tag> [if <indicator>]
//! obj <terms> @model
//! ```
//!
//! Terms are `<coef>*<name>`, `<coef>*<a>*<b>` for products and
//! `<coef>*<name>^2` for squares, separated by spaces, each coefficient with
//! an explicit sign. Numbers use the shortest representation that parses
//! back to the same `f64`.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::rows::{Nonlinear, RowKind, Sense};
use super::{Formulation, VarKind, OBJECTIVE_TAG};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDoc {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub var: String,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NonlinearDoc {
    Product { a: String, b: String, coef: f64 },
    Square { var: String, coef: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDoc {
    pub id: String,
    pub kind: RowKind,
    pub tag: String,
    pub terms: Vec<TermDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<NonlinearDoc>,
    pub sense: Sense,
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active_when: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationDocument {
    pub variables: Vec<VarDoc>,
    pub rows: Vec<RowDoc>,
    pub objective: Vec<TermDoc>,
}

impl From<&Formulation> for FormulationDocument {
    fn from(f: &Formulation) -> Self {
        let name = |v: usize| f.catalog.var(v).name.clone();
        let terms = |t: &[(usize, f64)]| t.iter().map(|&(v, coef)| TermDoc { var: name(v), coef }).collect();
        FormulationDocument {
            variables: f
                .catalog
                .vars()
                .iter()
                .map(|v| VarDoc { name: v.name.clone(), kind: v.kind, lb: v.lb, ub: v.ub })
                .collect(),
            rows: f
                .rows
                .iter()
                .map(|r| RowDoc {
                    id: r.id.clone(),
                    kind: r.kind,
                    tag: r.tag.to_string(),
                    terms: terms(&r.terms),
                    nonlinear: r.nonlinear.map(|nl| match nl {
                        Nonlinear::Product { a, b, coef } => NonlinearDoc::Product { a: name(a), b: name(b), coef },
                        Nonlinear::Square { v, coef } => NonlinearDoc::Square { var: name(v), coef },
                    }),
                    sense: r.sense,
                    rhs: r.rhs,
                    active_when: r.active_when.map(name),
                })
                .collect(),
            objective: terms(&f.objective),
        }
    }
}

pub fn export_json(f: &Formulation) -> String {
    let doc = FormulationDocument::from(f);
    let mut s = serde_json::to_string_pretty(&doc).expect("formulation serializes");
    s.push('\n');
    s
}

pub fn export_text(f: &Formulation) -> String {
    let name = |v: usize| f.catalog.var(v).name.as_str();
    let mut out = String::new();
    for v in f.catalog.vars() {
        let kind = match v.kind {
            VarKind::Binary => "binary",
            VarKind::Continuous => "continuous",
        };
        writeln!(out, "var {} {} {} {}", v.name, kind, v.lb, v.ub).unwrap();
    }
    for r in &f.rows {
        write!(out, "row {} {}", r.id, r.kind).unwrap();
        for &(v, c) in &r.terms {
            write!(out, " {:+}*{}", c, name(v)).unwrap();
        }
        match r.nonlinear {
            Some(Nonlinear::Product { a, b, coef }) => write!(out, " {:+}*{}*{}", coef, name(a), name(b)).unwrap(),
            Some(Nonlinear::Square { v, coef }) => write!(out, " {:+}*{}^2", coef, name(v)).unwrap(),
            None => {}
        }
        write!(out, " {} {} @{}", r.sense, r.rhs, r.tag).unwrap();
        if let Some(y) = r.active_when {
            write!(out, " if {}", name(y)).unwrap();
        }
        out.push('\n');
    }
    out.push_str("obj");
    for &(v, c) in &f.objective {
        write!(out, " {:+}*{}", c, name(v)).unwrap();
    }
    writeln!(out, " @{OBJECTIVE_TAG}").unwrap();
    out
}
