use crate::linalg::{DenseMatrix, LuFactors};
use crate::scalar::Scalar;

use super::{LpError, LpOptions, LpProblem, LpSolution, LpStatus};

const NONBASIC: usize = usize::MAX;
/// Refactorizations spent confirming a verdict before giving up.
const MAX_CONFIRMATIONS: usize = 20;

pub(super) struct Engine<'a, S> {
    p: &'a LpProblem<S>,
    m: usize,
    n: usize,
    /// Row-scaled structural columns.
    cols: Vec<Vec<(usize, S)>>,
    row_scale: Vec<S>,
    lo: Vec<S>,
    hi: Vec<S>,
    cost: Vec<S>,
    x: Vec<S>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    /// Explicit basis inverse, row-major.
    binv: Vec<S>,
    since_refactor: usize,
    iterations: usize,
    /// Bounds before perturbation, while a perturbation is in force.
    original: Option<(Vec<S>, Vec<S>)>,
    perturbations: usize,
    tol: S,
    opts: LpOptions,
}

enum Step {
    Flip,
    Pivot { row: usize, to_upper: bool },
}

impl<'a, S: Scalar> Engine<'a, S> {
    pub(super) fn new(p: &'a LpProblem<S>, opts: &LpOptions) -> Self {
        let (m, n) = (p.nrows(), p.ncols());
        let mut cols: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
        let mut row_scale = vec![S::one(); m];
        let mut lo = p.col_lo.clone();
        let mut hi = p.col_hi.clone();
        for (i, r) in p.rows.iter().enumerate() {
            let big = r.terms.iter().fold(S::zero(), |acc, &(_, a)| acc.max(a.abs()));
            let scale = if big > S::zero() { S::one() / big } else { S::one() };
            row_scale[i] = scale;
            // Activity range over the box bounds the slack even on open sides.
            let (mut amin, mut amax) = (S::zero(), S::zero());
            for &(j, a) in &r.terms {
                let a = a * scale;
                if a == S::zero() {
                    continue;
                }
                cols[j].push((i, a));
                let (u, v) = (a * p.col_lo[j], a * p.col_hi[j]);
                amin += u.min(v);
                amax += u.max(v);
            }
            lo.push((r.lo * scale).max(amin));
            hi.push((r.hi * scale).min(amax));
        }
        let mut cost = p.cost.clone();
        cost.extend(std::iter::repeat_n(S::zero(), m));
        let total = n + m;
        let mut x = vec![S::zero(); total];
        let mut at_upper = vec![false; total];
        for j in 0..n {
            // Start structurals at the bound favoured by their cost.
            at_upper[j] = cost[j] < S::zero();
            x[j] = if at_upper[j] { hi[j] } else { lo[j] };
        }
        let mut pos = vec![NONBASIC; total];
        let basis: Vec<usize> = (n..total).collect();
        for (k, &b) in basis.iter().enumerate() {
            pos[b] = k;
        }
        let mut binv = vec![S::zero(); m * m];
        for k in 0..m {
            binv[k * m + k] = -S::one();
        }
        let mut e = Self {
            p,
            m,
            n,
            cols,
            row_scale,
            lo,
            hi,
            cost,
            x,
            basis,
            pos,
            at_upper,
            binv,
            since_refactor: 0,
            iterations: 0,
            original: None,
            perturbations: 0,
            tol: S::of(opts.tol),
            opts: *opts,
        };
        e.recompute_basic();
        e
    }

    fn feas_tol(&self, bound: S) -> S {
        self.tol * S::one().max(bound.abs())
    }

    /// `a_j · v` for any column, slacks included.
    fn col_dot(&self, j: usize, v: &[S]) -> S {
        if j < self.n {
            self.cols[j].iter().fold(S::zero(), |acc, &(i, a)| acc + a * v[i])
        } else {
            -v[j - self.n]
        }
    }

    /// `B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<S> {
        let m = self.m;
        let mut out = vec![S::zero(); m];
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += self.binv[k * m + i] * a;
                }
            }
        } else {
            let i = j - self.n;
            for (k, o) in out.iter_mut().enumerate() {
                *o = -self.binv[k * m + i];
            }
        }
        out
    }

    /// `B⁻ᵀ c`.
    fn btran(&self, c: &[S]) -> Vec<S> {
        let m = self.m;
        let mut y = vec![S::zero(); m];
        for (k, &ck) in c.iter().enumerate() {
            if ck == S::zero() {
                continue;
            }
            let row = &self.binv[k * m..(k + 1) * m];
            for (yi, &b) in y.iter_mut().zip(row) {
                *yi += ck * b;
            }
        }
        y
    }

    fn recompute_basic(&mut self) {
        let m = self.m;
        let mut r = vec![S::zero(); m];
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || self.x[j] == S::zero() {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    r[i] -= a * self.x[j];
                }
            } else {
                r[j - self.n] += self.x[j];
            }
        }
        for k in 0..m {
            let row = &self.binv[k * m..(k + 1) * m];
            let v = row.iter().zip(&r).fold(S::zero(), |acc, (&b, &ri)| acc + b * ri);
            self.x[self.basis[k]] = v;
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut b = DenseMatrix::zeros(m);
        for (k, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    b[(i, k)] = a;
                }
            } else {
                b[(j - self.n, k)] = -S::one();
            }
        }
        match LuFactors::factorize(b, S::of(1e-13)) {
            Ok(lu) => {
                let mut e = vec![S::zero(); m];
                for c in 0..m {
                    e[c] = S::one();
                    let col = lu.solve(&e);
                    e[c] = S::zero();
                    for (r, v) in col.into_iter().enumerate() {
                        self.binv[r * m + c] = v;
                    }
                }
            }
            Err(err) => {
                log::debug!("lp: singular basis ({err}), restarting from slack basis");
                self.slack_basis();
            }
        }
        self.recompute_basic();
        Ok(())
    }

    /// True when the updated inverse no longer reproduces `A x = s` on the
    /// current point to working accuracy.
    fn drifted(&self) -> bool {
        let mut r: Vec<S> = (0..self.m).map(|i| -self.x[self.n + i]).collect();
        for j in 0..self.n {
            for &(i, a) in &self.cols[j] {
                r[i] += a * self.x[j];
            }
        }
        let scale = self.x.iter().fold(S::one(), |m, v| m.max(v.abs()));
        r.iter().any(|v| v.abs() > self.tol * S::of(1e-2) * scale)
    }

    /// `‖B‖₁·‖B⁻¹‖₁` from the scaled columns and the current inverse.
    fn condition_estimate(&self) -> f64 {
        let m = self.m;
        let norm_b =
            self.basis
                .iter()
                .map(|&j| {
                    if j < self.n {
                        self.cols[j].iter().fold(S::zero(), |acc, &(_, a)| acc + a.abs())
                    } else {
                        S::one()
                    }
                })
                .fold(S::zero(), S::max);
        let norm_inv =
            (0..m).map(|c| (0..m).fold(S::zero(), |acc, r| acc + self.binv[r * m + c].abs())).fold(S::zero(), S::max);
        (norm_b * norm_inv).to_f64_lossy()
    }

    fn slack_basis(&mut self) {
        let (m, n) = (self.m, self.n);
        for &j in &self.basis {
            self.pos[j] = NONBASIC;
        }
        for j in 0..n + m {
            if self.pos[j] == NONBASIC {
                let up = (self.hi[j] - self.x[j]).abs() < (self.x[j] - self.lo[j]).abs();
                self.at_upper[j] = up;
                self.x[j] = if up { self.hi[j] } else { self.lo[j] };
            }
        }
        self.basis = (n..n + m).collect();
        for (k, &b) in self.basis.iter().enumerate() {
            self.pos[b] = k;
        }
        self.binv.iter_mut().for_each(|v| *v = S::zero());
        for k in 0..m {
            self.binv[k * m + k] = -S::one();
        }
    }

    /// Widens every non-fixed box by a small, index-dependent amount so that
    /// degenerate vertices split apart. Used when Bland's rule still cycles,
    /// which tolerance-based ratio tests allow.
    fn perturb(&mut self) {
        self.original = Some((self.lo.clone(), self.hi.clone()));
        self.perturbations += 1;
        let golden = 0.618_033_988_749_895;
        for j in 0..self.lo.len() {
            if self.lo[j] == self.hi[j] {
                continue;
            }
            let jitter = S::of(1.0 + ((j as f64 + 1.0) * golden * self.perturbations as f64).fract());
            let step = self.tol * S::of(1e2) * jitter;
            let (lo, hi) = (self.lo[j], self.hi[j]);
            if lo.is_finite() {
                self.lo[j] = lo - step * S::one().max(lo.abs());
            }
            if hi.is_finite() {
                self.hi[j] = hi + step * S::one().max(hi.abs());
            }
        }
        self.snap_nonbasic();
    }

    /// Restores the original boxes.
    fn unperturb(&mut self) {
        if let Some((lo, hi)) = self.original.take() {
            self.lo = lo;
            self.hi = hi;
            self.snap_nonbasic();
        }
    }

    fn snap_nonbasic(&mut self) {
        for j in 0..self.lo.len() {
            if self.pos[j] == NONBASIC {
                self.x[j] = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
            }
        }
        self.recompute_basic();
    }

    /// Phase-1 cost of each basic variable: −1 below its box, +1 above.
    fn infeasibility_costs(&self) -> (Vec<S>, S) {
        let mut c = vec![S::zero(); self.m];
        let mut sum = S::zero();
        for (k, &b) in self.basis.iter().enumerate() {
            let v = self.x[b];
            if v < self.lo[b] - self.feas_tol(self.lo[b]) {
                c[k] = -S::one();
                sum += self.lo[b] - v;
            } else if v > self.hi[b] + self.feas_tol(self.hi[b]) {
                c[k] = S::one();
                sum += v - self.hi[b];
            }
        }
        (c, sum)
    }

    fn reduced_cost(&self, j: usize, y: &[S], phase1: bool) -> S {
        let c = if phase1 { S::zero() } else { self.cost[j] };
        c - self.col_dot(j, y)
    }

    fn choose_entering(&self, y: &[S], phase1: bool, bland: bool) -> Option<(usize, S)> {
        let mut best: Option<(usize, S)> = None;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.reduced_cost(j, y, phase1);
            let eligible = (d < -self.tol && !self.at_upper[j]) || (d > self.tol && self.at_upper[j]);
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if best.is_none_or(|(_, bd)| d.abs() > bd.abs()) {
                best = Some((j, d));
            }
        }
        best
    }

    /// Ratio test along direction `delta` (change of each basic variable per
    /// unit step of the entering variable). Returns the step and its kind.
    fn ratio_test(&self, j: usize, delta: &[S], phase1: bool, bland: bool) -> (S, Step) {
        let piv_tol = S::of(1e-9);
        let flip = self.hi[j] - self.lo[j];
        // Target bound each basic variable would stop at, if any.
        let target = |k: usize| -> Option<(S, bool)> {
            let b = self.basis[k];
            let (v, d) = (self.x[b], delta[k]);
            if d.abs() < piv_tol {
                return None;
            }
            let below = phase1 && v < self.lo[b] - self.feas_tol(self.lo[b]);
            let above = phase1 && v > self.hi[b] + self.feas_tol(self.hi[b]);
            match (d > S::zero(), below, above) {
                (true, true, _) => Some((self.lo[b], false)),
                (true, false, true) => None,
                (true, false, false) => Some((self.hi[b], true)),
                (false, _, true) => Some((self.hi[b], true)),
                (false, true, _) => None,
                (false, false, false) => Some((self.lo[b], false)),
            }
        };
        let exact = |k: usize, bound: S| -> S { ((bound - self.x[self.basis[k]]) / delta[k]).max(S::zero()) };

        if bland {
            let mut best: Option<(S, usize, bool)> = None;
            for k in 0..self.m {
                if let Some((bound, up)) = target(k) {
                    let t = exact(k, bound);
                    let better = match best {
                        None => true,
                        Some((bt, bk, _)) => t < bt || (t == bt && self.basis[k] < self.basis[bk]),
                    };
                    if better {
                        best = Some((t, k, up));
                    }
                }
            }
            return match best {
                Some((t, k, up)) if t < flip => (t, Step::Pivot { row: k, to_upper: up }),
                _ => (flip, Step::Flip),
            };
        }

        // Harris: largest step with bounds relaxed by their tolerance, then
        // the largest pivot among the rows blocking within that step.
        let mut relaxed = S::infinity();
        for k in 0..self.m {
            if let Some((bound, _)) = target(k) {
                let slack = self.feas_tol(bound) * delta[k].signum();
                let t = ((bound + slack - self.x[self.basis[k]]) / delta[k]).max(S::zero());
                relaxed = relaxed.min(t);
            }
        }
        if flip <= relaxed {
            return (flip, Step::Flip);
        }
        let mut best: Option<(usize, bool)> = None;
        for k in 0..self.m {
            if let Some((bound, up)) = target(k) {
                if exact(k, bound) <= relaxed && best.is_none_or(|(bk, _)| delta[k].abs() > delta[bk].abs()) {
                    best = Some((k, up));
                }
            }
        }
        let (k, up) = best.expect("a row limits the relaxed step");
        let bound = if up { self.hi[self.basis[k]] } else { self.lo[self.basis[k]] };
        (exact(k, bound), Step::Pivot { row: k, to_upper: up })
    }

    fn pivot(&mut self, row: usize, j: usize, alpha: &[S]) {
        let m = self.m;
        let inv = S::one() / alpha[row];
        for c in 0..m {
            self.binv[row * m + c] *= inv;
        }
        for k in 0..m {
            let f = alpha[k];
            if k == row || f == S::zero() {
                continue;
            }
            for c in 0..m {
                let v = self.binv[row * m + c];
                self.binv[k * m + c] -= f * v;
            }
        }
        let leaving = self.basis[row];
        self.pos[leaving] = NONBASIC;
        self.basis[row] = j;
        self.pos[j] = row;
        self.since_refactor += 1;
    }

    pub(super) fn run(mut self) -> Result<LpSolution<S>, LpError> {
        let limit = self.opts.max_iterations.unwrap_or(100 * (self.m + self.n) + 1000);
        let mut stall = 0usize;
        let mut bland = false;
        let mut verified_once = false;
        let mut confirmations = 0usize;
        if self.lo.iter().zip(&self.hi).any(|(&l, &h)| l > h + self.feas_tol(h)) {
            return Ok(self.finish(LpStatus::Infeasible, S::infinity(), None));
        }
        for j in 0..self.lo.len() {
            // Clipped slack boxes may cross by rounding.
            if self.lo[j] > self.hi[j] {
                self.hi[j] = self.lo[j];
            }
        }
        // The slack basis inverse is set up by `new`.
        let refactor_every = self.opts.refactor_every.unwrap_or((2 * self.m).max(100));
        loop {
            if self.iterations >= limit {
                return Err(LpError::IterationLimit(limit));
            }
            if self.since_refactor >= refactor_every {
                self.refactor()?;
            }
            let (c1, infeas) = self.infeasibility_costs();
            let phase1 = infeas > S::zero();
            let cb: Vec<S> = if phase1 { c1 } else { self.basis.iter().map(|&b| self.cost[b]).collect() };
            let y = self.btran(&cb);
            let Some((j, d)) = self.choose_entering(&y, phase1, bland) else {
                // Confirm on a fresh factorization before concluding. Phase-1
                // pricing is sensitive to a stale inverse even when the
                // point itself still satisfies the rows, so infeasibility is
                // always confirmed.
                if !verified_once && self.since_refactor > 0 && (phase1 || self.drifted()) {
                    verified_once = true;
                    confirmations += 1;
                    if confirmations > MAX_CONFIRMATIONS {
                        // Each fresh factorization keeps finding another
                        // entering column: the basis is too ill-conditioned
                        // to trust either verdict.
                        return Err(LpError::Numerical {
                            iterations: self.iterations,
                            detail: format!(
                                "{} not confirmed after {MAX_CONFIRMATIONS} refactorizations, basis condition ≈ {:.1e}",
                                if phase1 { "infeasibility" } else { "optimality" },
                                self.condition_estimate()
                            ),
                        });
                    }
                    self.refactor()?;
                    continue;
                }
                if self.original.is_some() {
                    // Finish from the same basis on the true bounds.
                    self.unperturb();
                    verified_once = false;
                    stall = 0;
                    bland = false;
                    continue;
                }
                if phase1 {
                    return Ok(self.finish(LpStatus::Infeasible, infeas, None));
                }
                return Ok(self.finish(LpStatus::Optimal, S::zero(), Some(y)));
            };
            verified_once = false;
            self.iterations += 1;
            let dir = if d < S::zero() { S::one() } else { -S::one() };
            let alpha = self.ftran(j);
            let delta: Vec<S> = alpha.iter().map(|&a| -dir * a).collect();
            let (t, step) = self.ratio_test(j, &delta, phase1, bland);
            if !t.is_finite() {
                return Err(LpError::Numerical {
                    iterations: self.iterations,
                    detail: format!("unbounded ratio, basis condition ≈ {:.1e}", self.condition_estimate()),
                });
            }

            self.x[j] += dir * t;
            for (k, &dk) in delta.iter().enumerate() {
                let b = self.basis[k];
                self.x[b] += dk * t;
            }
            match step {
                Step::Flip => {
                    self.at_upper[j] = !self.at_upper[j];
                    self.x[j] = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
                }
                Step::Pivot { row, to_upper } => {
                    let leaving = self.basis[row];
                    self.pivot(row, j, &alpha);
                    self.at_upper[leaving] = to_upper;
                    self.x[leaving] = if to_upper { self.hi[leaving] } else { self.lo[leaving] };
                }
            }

            let progress = (d * t).abs();
            if progress <= self.tol * S::of(1e-3) {
                stall += 1;
                if stall > self.opts.stall_limit && !bland {
                    log::trace!("lp: stalled, switching to Bland's rule");
                    bland = true;
                } else if stall > 4 * self.opts.stall_limit && self.original.is_none() && self.perturbations < 5 {
                    log::trace!("lp: cycling under Bland's rule, perturbing bounds");
                    self.perturb();
                    stall = 0;
                    bland = false;
                }
            } else {
                stall = 0;
                bland = false;
            }
        }
    }

    fn finish(self, status: LpStatus, infeasibility: S, y: Option<Vec<S>>) -> LpSolution<S> {
        let (n, m) = (self.n, self.m);
        let x: Vec<S> = self.x[..n].to_vec();
        let objective = self.p.objective(&x);
        let y = y.unwrap_or_else(|| vec![S::zero(); m]);
        let mut reduced = vec![S::zero(); n];
        let mut bound = S::zero();
        for j in 0..n + m {
            // Basic columns are priced too: with an inexact inverse their
            // reduced costs are not quite zero, and the bound must hold for
            // the multipliers actually returned.
            let d = self.reduced_cost(j, &y, false);
            if j < n {
                reduced[j] = if self.pos[j] != NONBASIC { S::zero() } else { d };
            }
            bound += (d * self.lo[j]).min(d * self.hi[j]);
        }
        let duals = y.iter().zip(&self.row_scale).map(|(&v, &s)| v * s).collect();
        let (objective, dual_bound) = match status {
            LpStatus::Optimal => (objective, bound.min(objective)),
            _ => (S::infinity(), S::infinity()),
        };
        LpSolution {
            status,
            x,
            objective,
            dual_bound,
            duals,
            reduced_costs: reduced,
            infeasibility,
            iterations: self.iterations,
            basis: self.basis,
        }
    }
}
