//! Branching variable selection.

use crate::formulation::{Formulation, VarId, VarKey};
use crate::relaxation::{ColumnOrigin, LinearRelaxation};

/// Split of one variable: the down child gets `hi = down`, the up child
/// `lo = up`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchDecision {
    pub var: VarId,
    pub down: f64,
    pub up: f64,
}

/// Envelope violations below this are treated as exact.
const VIOLATION_TOL: f64 = 1e-9;
/// Boxes narrower than this fraction of the root width are not split.
const MIN_REL_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Branching {
    /// Binaries with an optional gate: a flow direction binary is only worth
    /// splitting while its pipe can be built.
    binaries: Vec<(VarId, Option<VarId>)>,
    is_binary: Vec<bool>,
    /// Renovation levels restricted to a grid.
    graded: Vec<VarId>,
    grid: Option<Vec<f64>>,
    root_width: Vec<f64>,
}

impl Branching {
    pub fn new(f: &Formulation, grid: Option<Vec<f64>>) -> Self {
        let vars = f.catalog.vars();
        let mut binaries = Vec::new();
        let mut graded = Vec::new();
        for (id, v) in vars.iter().enumerate() {
            if v.is_binary() {
                let gate = match v.key {
                    VarKey::FlowPos(k) | VarKey::FlowNeg(k) => f.id(VarKey::PipeBuilt(k)),
                    _ => None,
                };
                binaries.push((id, gate));
            } else if grid.is_some() && matches!(v.key, VarKey::Reno1(..) | VarKey::Reno2(..)) {
                graded.push(id);
            }
        }
        Self {
            binaries,
            is_binary: vars.iter().map(|v| v.is_binary()).collect(),
            graded,
            grid,
            root_width: vars.iter().map(|v| v.ub - v.lb).collect(),
        }
    }

    /// Neighbouring grid points of `v` inside `[lo, hi]`, when `v` is off
    /// the grid by more than the tolerance.
    fn grid_split(&self, lo: f64, hi: f64, v: f64) -> Option<(f64, f64, f64)> {
        let g = self.grid.as_ref()?;
        let inside: Vec<f64> = g.iter().copied().filter(|&p| p >= lo - 1e-12 && p <= hi + 1e-12).collect();
        if inside.len() < 2 {
            return None;
        }
        if inside.iter().any(|&p| (p - v).abs() <= 1e-6) {
            return None;
        }
        let down = inside.iter().copied().filter(|&p| p < v).fold(f64::NAN, f64::max);
        let up = inside.iter().copied().filter(|&p| p > v).fold(f64::NAN, f64::min);
        if down.is_nan() || up.is_nan() {
            // Outside the grid hull; split at the nearest interior point.
            let (a, b) = if down.is_nan() {
                (inside[0], inside[1])
            } else {
                (inside[inside.len() - 2], inside[inside.len() - 1])
            };
            return Some((a, b, 0.5));
        }
        let frac = ((v - down) / (up - down)).min((up - v) / (up - down));
        Some((down, up, frac))
    }

    /// Most fractional binary or graded variable, then the factor of the
    /// largest envelope violation. `None` when the LP point needs no split.
    pub fn choose(&self, r: &LinearRelaxation, lo: &[f64], hi: &[f64], x: &[f64]) -> Option<BranchDecision> {
        let mut best: Option<(f64, BranchDecision)> = None;
        let mut offer = |score: f64, d: BranchDecision| {
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, d));
            }
        };
        for &(v, gate) in &self.binaries {
            if lo[v] == hi[v] {
                continue;
            }
            if gate.is_some_and(|g| x[g] <= 1e-6) {
                continue;
            }
            let frac = x[v].min(1.0 - x[v]);
            if frac > 1e-6 {
                offer(frac, BranchDecision { var: v, down: 0.0, up: 1.0 });
            }
        }
        for &v in &self.graded {
            if let Some((down, up, frac)) = self.grid_split(lo[v], hi[v], x[v]) {
                offer(frac, BranchDecision { var: v, down, up });
            }
        }
        if let Some((_, d)) = best {
            return Some(d);
        }

        let mut worst: Option<(f64, VarId)> = None;
        for a in r.aux_violations(x) {
            if a.violation <= VIOLATION_TOL * (1.0 + x[a.column].abs()) {
                continue;
            }
            let factors: &[VarId] = match &a.origin {
                ColumnOrigin::Product { a, b } => &[*a, *b],
                ColumnOrigin::Square { v } => &[*v],
                ColumnOrigin::Model(_) => continue,
            };
            let pick = factors
                .iter()
                .copied()
                .filter(|&v| !self.is_binary[v] && self.splittable(lo, hi, v))
                .max_by(|&p, &q| self.rel_width(lo, hi, p).total_cmp(&self.rel_width(lo, hi, q)));
            if let Some(v) = pick {
                if worst.is_none_or(|(s, _)| a.violation > s) {
                    worst = Some((a.violation, v));
                }
            }
        }
        let (_, v) = worst?;
        let w = hi[v] - lo[v];
        let at = x[v].clamp(lo[v] + 0.1 * w, lo[v] + 0.9 * w);
        Some(BranchDecision { var: v, down: at, up: at })
    }

    /// Split used when a node has no LP point: the first open binary, else
    /// bisection of the widest continuous variable.
    pub fn fallback(&self, lo: &[f64], hi: &[f64]) -> Option<BranchDecision> {
        if let Some(&(v, _)) = self.binaries.iter().find(|(v, _)| lo[*v] < hi[*v]) {
            return Some(BranchDecision { var: v, down: 0.0, up: 1.0 });
        }
        (0..lo.len())
            .filter(|&v| !self.is_binary[v] && self.splittable(lo, hi, v))
            .max_by(|&p, &q| self.rel_width(lo, hi, p).total_cmp(&self.rel_width(lo, hi, q)))
            .map(|v| {
                let mid = 0.5 * (lo[v] + hi[v]);
                BranchDecision { var: v, down: mid, up: mid }
            })
    }

    fn rel_width(&self, lo: &[f64], hi: &[f64], v: VarId) -> f64 {
        let root = self.root_width[v];
        if root > 0.0 {
            (hi[v] - lo[v]) / root
        } else {
            0.0
        }
    }

    fn splittable(&self, lo: &[f64], hi: &[f64], v: VarId) -> bool {
        self.rel_width(lo, hi, v) > MIN_REL_WIDTH
    }
}

/// Applies `b` to a copy of the box, giving the two child boxes.
pub fn branch(lo: &[f64], hi: &[f64], b: BranchDecision) -> [(Vec<f64>, Vec<f64>); 2] {
    let mut down = (lo.to_vec(), hi.to_vec());
    let mut up = (lo.to_vec(), hi.to_vec());
    down.1[b.var] = b.down;
    up.0[b.var] = b.up;
    [down, up]
}
