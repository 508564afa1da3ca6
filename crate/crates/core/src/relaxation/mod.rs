//! Linear relaxation of a formulation on a variable box.
//!
//! Each distinct product `a·b` gets an auxiliary column bounded by its
//! McCormick envelope, each square `v²` an auxiliary column between tangent
//! lines and the secant. Rows active only under an indicator become big-M
//! rows with M taken from the box. Single-variable rows are folded into the
//! box before anything else is generated.

mod envelope;

use std::collections::{BTreeMap, HashMap};

use crate::formulation::{Formulation, Nonlinear, Sense, VarId, VarKey};
use crate::lp::LpProblem;
use crate::scalar::Scalar;

pub use envelope::{
    mccormick_envelope, product_range, relax_quadratic, square_range, tangent_points, CutSense, EnvelopeCut,
    EnvelopeError,
};

/// Bounds per catalog variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VarBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl VarBox {
    pub fn of(f: &Formulation) -> Self {
        Self { lo: f.catalog.lower_bounds(), hi: f.catalog.upper_bounds() }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn width(&self, v: VarId) -> f64 {
        self.hi[v] - self.lo[v]
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().enumerate().all(|(j, &v)| v >= self.lo[j] - tol && v <= self.hi[j] + tol)
    }

    /// True when `self` lies inside `outer`.
    pub fn is_subset_of(&self, outer: &VarBox) -> bool {
        (0..self.len()).all(|j| self.lo[j] >= outer.lo[j] && self.hi[j] <= outer.hi[j])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxOptions {
    /// Tangent lines per square on top of the extra points.
    pub n_tangents: usize,
    /// Adds `u_i·ū − u_j·ū = ū²` per arc, valid because `ū = u_i − u_j`.
    pub loss_cuts: bool,
    /// Further tangent points, typically relaxation values seen at ancestor
    /// nodes. Points outside the box are ignored.
    pub extra_tangents: Vec<(VarId, f64)>,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { n_tangents: 3, loss_cuts: true, extra_tangents: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnOrigin {
    Model(VarId),
    Product { a: VarId, b: VarId },
    Square { v: VarId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxColumn {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub origin: ColumnOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOrigin {
    /// Linearized model row, by index into the formulation rows.
    Model(usize),
    /// Envelope of an auxiliary column.
    Envelope(usize),
    /// Loss identity of an arc's voltage drop variable.
    LossCut(VarId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxRow {
    pub id: String,
    pub terms: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
    pub origin: RowOrigin,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelaxError {
    #[error("variable {0} has an unbounded or empty box")]
    Unbounded(String),
}

/// Deviation of an auxiliary column from the product it stands for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxViolation {
    pub column: usize,
    pub origin: ColumnOrigin,
    /// `|aux − a·b|` or `|aux − v²|`.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRelaxation {
    /// Model variables first, in catalog order, then auxiliaries.
    pub columns: Vec<RelaxColumn>,
    pub rows: Vec<RelaxRow>,
    pub objective: Vec<(usize, f64)>,
    /// Envelope rows generated for each nonlinear model row.
    pub envelopes: BTreeMap<usize, Vec<usize>>,
    /// Set when folding single-variable rows emptied the box.
    pub empty_box: bool,
    model_vars: usize,
    products: HashMap<(VarId, VarId), usize>,
    squares: HashMap<VarId, usize>,
    aux_rows: HashMap<usize, Vec<usize>>,
}

const BOX_TOL: f64 = 1e-9;

struct Builder<'a> {
    f: &'a Formulation,
    opts: &'a RelaxOptions,
    r: LinearRelaxation,
}

impl Builder<'_> {
    fn bounds(&self, col: usize) -> (f64, f64) {
        let c = &self.r.columns[col];
        (c.lo, c.hi)
    }

    fn push_row(&mut self, id: String, terms: Vec<(usize, f64)>, lo: f64, hi: f64, origin: RowOrigin) -> usize {
        self.r.rows.push(RelaxRow { id, terms, lo, hi, origin });
        self.r.rows.len() - 1
    }

    fn push_cut(&mut self, aux: usize, x: usize, y: Option<usize>, cut: EnvelopeCut<f64>, id: String) {
        // aux − cx·x − cy·y ⋛ c0
        let mut terms = vec![(aux, 1.0), (x, -cut.cx)];
        if let Some(y) = y {
            terms.push((y, -cut.cy));
        }
        let (lo, hi) = match cut.sense {
            CutSense::Lower => (cut.c0, f64::INFINITY),
            CutSense::Upper => (f64::NEG_INFINITY, cut.c0),
        };
        let row = self.push_row(id, terms, lo, hi, RowOrigin::Envelope(aux));
        self.r.aux_rows.entry(aux).or_default().push(row);
    }

    fn product(&mut self, a: VarId, b: VarId) -> usize {
        if let Some(&c) = self.r.products.get(&(a, b)) {
            return c;
        }
        let (ba, bb) = (self.bounds(a), self.bounds(b));
        let (lo, hi) = product_range(ba, bb);
        let name = format!("w[{}*{}]", self.f.catalog.var(a).name, self.f.catalog.var(b).name);
        let col = self.r.columns.len();
        self.r.columns.push(RelaxColumn { name: name.clone(), lo, hi, origin: ColumnOrigin::Product { a, b } });
        self.r.products.insert((a, b), col);
        let cuts = mccormick_envelope(ba, bb).expect("box checked finite");
        for (n, cut) in cuts.into_iter().enumerate() {
            self.push_cut(col, a, Some(b), cut, format!("mccormick{}:{name}", n + 1));
        }
        col
    }

    fn square(&mut self, v: VarId) -> usize {
        if let Some(&c) = self.r.squares.get(&v) {
            return c;
        }
        let bv = self.bounds(v);
        let (lo, hi) = square_range(bv);
        let name = format!("sq[{}]", self.f.catalog.var(v).name);
        let col = self.r.columns.len();
        self.r.columns.push(RelaxColumn { name: name.clone(), lo, hi, origin: ColumnOrigin::Square { v } });
        self.r.squares.insert(v, col);
        let mut pts = tangent_points(bv.0, bv.1, self.opts.n_tangents.max(1));
        pts.extend(self.opts.extra_tangents.iter().filter(|&&(w, p)| w == v && p > bv.0 && p < bv.1).map(|&(_, p)| p));
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let cuts = relax_quadratic(bv, &pts).expect("box checked finite");
        for (n, cut) in cuts.into_iter().enumerate() {
            self.push_cut(col, v, None, cut, format!("square{}:{name}", n + 1));
        }
        col
    }
}

/// Builds the relaxation of `f` on `bx`.
pub fn relax(f: &Formulation, bx: &VarBox, opts: &RelaxOptions) -> Result<LinearRelaxation, RelaxError> {
    let n = f.var_count();
    let (mut lo, mut hi) = (bx.lo.clone(), bx.hi.clone());
    for j in 0..n {
        if !lo[j].is_finite() || !hi[j].is_finite() || lo[j] > hi[j] {
            return Err(RelaxError::Unbounded(f.catalog.var(j).name.clone()));
        }
    }

    let mut empty_box = false;
    for row in &f.rows {
        if row.nonlinear.is_some() || row.active_when.is_some() || row.terms.len() != 1 {
            continue;
        }
        let (v, c) = row.terms[0];
        let bound = row.rhs / c;
        let (lower, upper) = match (row.sense, c > 0.0) {
            (Sense::Eq, _) => (true, true),
            (Sense::Le, true) | (Sense::Ge, false) => (false, true),
            (Sense::Ge, true) | (Sense::Le, false) => (true, false),
        };
        if lower {
            lo[v] = lo[v].max(bound);
        }
        if upper {
            hi[v] = hi[v].min(bound);
        }
        if lo[v] > hi[v] {
            if lo[v] - hi[v] <= BOX_TOL * lo[v].abs().max(1.0) {
                hi[v] = lo[v];
            } else {
                empty_box = true;
                hi[v] = lo[v];
            }
        }
    }

    let columns = f
        .catalog
        .vars()
        .iter()
        .enumerate()
        .map(|(j, v)| RelaxColumn { name: v.name.clone(), lo: lo[j], hi: hi[j], origin: ColumnOrigin::Model(j) })
        .collect();
    let mut b = Builder {
        f,
        opts,
        r: LinearRelaxation {
            columns,
            rows: Vec::new(),
            objective: f.objective.clone(),
            envelopes: BTreeMap::new(),
            empty_box,
            model_vars: n,
            products: HashMap::new(),
            squares: HashMap::new(),
            aux_rows: HashMap::new(),
        },
    };

    for (idx, row) in f.rows.iter().enumerate() {
        if row.is_linear() && row.active_when.is_none() && row.terms.len() == 1 {
            continue;
        }
        let mut terms: Vec<(usize, f64)> = row.terms.clone();
        if let Some(nl) = row.nonlinear {
            let (aux, coef) = match nl {
                Nonlinear::Product { a, b: bb, coef } => (b.product(a, bb), coef),
                Nonlinear::Square { v, coef } => (b.square(v), coef),
            };
            terms.push((aux, coef));
            b.r.envelopes.insert(idx, b.r.aux_rows[&aux].clone());
        }
        let (mut rlo, mut rhi) = match row.sense {
            Sense::Eq => (row.rhs, row.rhs),
            Sense::Le => (f64::NEG_INFINITY, row.rhs),
            Sense::Ge => (row.rhs, f64::INFINITY),
        };
        if let Some(y) = row.active_when {
            let (ylo, yhi) = b.bounds(y);
            if yhi < 0.5 {
                continue;
            }
            if ylo < 0.5 {
                // Σ terms ≤ rhs when y = 1 becomes Σ terms + M·y ≤ rhs + M with
                // M the largest excess of the left-hand side over the box.
                let others = terms.iter().filter(|&&(v, _)| v != y);
                let (mut amin, mut amax) = (0.0, 0.0);
                for &(v, c) in others {
                    let (l, h) = b.bounds(v);
                    amin += (c * l).min(c * h);
                    amax += (c * l).max(c * h);
                }
                let cy: f64 = terms.iter().filter(|&&(v, _)| v == y).map(|&(_, c)| c).sum();
                terms.retain(|&(v, _)| v != y);
                // With y = 1 the row reads Σ others + cy ≶ rhs.
                let (base_lo, base_hi) = (rlo - cy, rhi - cy);
                if rhi.is_finite() {
                    let m = (amax - base_hi).max(0.0);
                    if m > 0.0 {
                        let mut t = terms.clone();
                        t.push((y, m));
                        b.push_row(
                            format!("{}:upper", row.id),
                            t,
                            f64::NEG_INFINITY,
                            base_hi + m,
                            RowOrigin::Model(idx),
                        );
                    }
                }
                if rlo.is_finite() {
                    let m = (base_lo - amin).max(0.0);
                    if m > 0.0 {
                        let mut t = terms.clone();
                        t.push((y, -m));
                        b.push_row(format!("{}:lower", row.id), t, base_lo - m, f64::INFINITY, RowOrigin::Model(idx));
                    }
                }
                continue;
            }
            // Indicator fixed to 1: the row is enforced as is.
            let _ = (&mut rlo, &mut rhi);
        }
        b.push_row(row.id.clone(), terms, rlo, rhi, RowOrigin::Model(idx));
    }

    if opts.loss_cuts {
        add_loss_cuts(&mut b);
    }
    Ok(b.r)
}

/// `u_i·ū − u_j·ū − ū² = 0` for every arc whose voltage drop row and both
/// Ohmic products are present.
fn add_loss_cuts(b: &mut Builder<'_>) {
    let f = b.f;
    for row in f.rows_tagged("voltdrop") {
        let Some(&(du, _)) = row.terms.iter().find(|&&(v, _)| matches!(f.catalog.var(v).key, VarKey::VoltageDrop(_)))
        else {
            continue;
        };
        let ui = row.terms.iter().find(|&&(v, c)| v != du && c < 0.0).map(|&(v, _)| v);
        let uj = row.terms.iter().find(|&&(v, c)| v != du && c > 0.0).map(|&(v, _)| v);
        let (Some(ui), Some(uj)) = (ui, uj) else { continue };
        let (Some(&wo), Some(&wi)) = (b.r.products.get(&(ui, du)), b.r.products.get(&(uj, du))) else {
            continue;
        };
        let sq = b.square(du);
        b.push_row(
            format!("losscut:{}", f.catalog.var(du).name),
            vec![(wo, 1.0), (wi, -1.0), (sq, -1.0)],
            0.0,
            0.0,
            RowOrigin::LossCut(du),
        );
    }
}

impl LinearRelaxation {
    pub fn model_vars(&self) -> usize {
        self.model_vars
    }

    pub fn to_lp<S: Scalar>(&self) -> LpProblem<S> {
        let mut p = LpProblem::new();
        let mut cost = vec![0.0; self.columns.len()];
        for &(v, c) in &self.objective {
            cost[v] += c;
        }
        for (c, &k) in self.columns.iter().zip(&cost) {
            p.add_col(S::of(c.lo), S::of(c.hi), S::of(k));
        }
        let cvt = |v: f64| {
            if v == f64::INFINITY {
                S::infinity()
            } else if v == f64::NEG_INFINITY {
                S::neg_infinity()
            } else {
                S::of(v)
            }
        };
        for r in &self.rows {
            let terms = r.terms.iter().map(|&(j, a)| (j, S::of(a))).collect();
            p.add_row(terms, cvt(r.lo), cvt(r.hi));
        }
        p
    }

    /// Model part of a relaxation solution.
    pub fn model_point<'x>(&self, x: &'x [f64]) -> &'x [f64] {
        &x[..self.model_vars]
    }

    pub fn aux_violations(&self, x: &[f64]) -> Vec<AuxViolation> {
        let mut out: Vec<AuxViolation> = self
            .columns
            .iter()
            .enumerate()
            .filter_map(|(col, c)| {
                let exact = match c.origin {
                    ColumnOrigin::Model(_) => return None,
                    ColumnOrigin::Product { a, b } => x[a] * x[b],
                    ColumnOrigin::Square { v } => x[v] * x[v],
                };
                Some(AuxViolation { column: col, origin: c.origin, violation: (x[col] - exact).abs() })
            })
            .collect();
        out.sort_by_key(|a| a.column);
        out
    }

    pub fn square_column(&self, v: VarId) -> Option<usize> {
        self.squares.get(&v).copied()
    }

    pub fn product_column(&self, a: VarId, b: VarId) -> Option<usize> {
        self.products.get(&(a, b)).copied()
    }

    /// Adds the tangent of `v²` at `point`. Returns false when `v` has no
    /// square column.
    pub fn add_tangent(&mut self, v: VarId, point: f64) -> bool {
        let Some(col) = self.square_column(v) else { return false };
        let id = format!("tangent:{}@{point}", self.columns[col].name);
        self.rows.push(RelaxRow {
            id,
            terms: vec![(col, 1.0), (v, -2.0 * point)],
            lo: -point * point,
            hi: f64::INFINITY,
            origin: RowOrigin::Envelope(col),
        });
        self.aux_rows.entry(col).or_default().push(self.rows.len() - 1);
        true
    }

    /// Largest row or bound violation of `x`, for soundness checks.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, c) in self.columns.iter().enumerate() {
            worst = worst.max(c.lo - x[j]).max(x[j] - c.hi);
        }
        for r in &self.rows {
            let a: f64 = r.terms.iter().map(|&(j, c)| c * x[j]).sum();
            worst = worst.max(r.lo - a).max(a - r.hi);
        }
        worst
    }

    /// Extends a model point with exact auxiliary values.
    pub fn lift(&self, model: &[f64]) -> Vec<f64> {
        let mut x = model.to_vec();
        for c in &self.columns[self.model_vars..] {
            x.push(match c.origin {
                ColumnOrigin::Model(j) => model[j],
                ColumnOrigin::Product { a, b } => model[a] * model[b],
                ColumnOrigin::Square { v } => model[v] * model[v],
            });
        }
        x
    }
}
