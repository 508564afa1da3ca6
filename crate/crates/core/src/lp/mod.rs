//! Dense bounded-variable revised simplex for the bounding LPs.
//!
//! Problems have the form `min cᵀx` subject to `lo ≤ A x ≤ hi` row-wise and
//! finite column boxes. Each row gets a slack `s = A x` so the basis system
//! is `[A −I] (x, s) = 0`; the initial basis is all slacks.

mod simplex;

use std::fmt;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow<S> {
    pub terms: Vec<(usize, S)>,
    /// May be `-∞`.
    pub lo: S,
    /// May be `+∞`.
    pub hi: S,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem<S> {
    pub col_lo: Vec<S>,
    pub col_hi: Vec<S>,
    pub cost: Vec<S>,
    pub rows: Vec<LpRow<S>>,
}

impl<S: Scalar> LpProblem<S> {
    pub fn new() -> Self {
        Self { col_lo: Vec::new(), col_hi: Vec::new(), cost: Vec::new(), rows: Vec::new() }
    }

    pub fn add_col(&mut self, lo: S, hi: S, cost: S) -> usize {
        self.col_lo.push(lo);
        self.col_hi.push(hi);
        self.cost.push(cost);
        self.col_lo.len() - 1
    }

    pub fn add_row(&mut self, terms: Vec<(usize, S)>, lo: S, hi: S) -> usize {
        self.rows.push(LpRow { terms, lo, hi });
        self.rows.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.col_lo.len()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self, x: &[S]) -> S {
        self.cost.iter().zip(x).fold(S::zero(), |acc, (&c, &v)| acc + c * v)
    }

    pub fn activity(&self, row: usize, x: &[S]) -> S {
        self.rows[row].terms.iter().fold(S::zero(), |acc, &(j, a)| acc + a * x[j])
    }

    /// Largest violation of a row or column bound at `x`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.col_lo[j] - v).max(v - self.col_hi[j]);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let a = self.activity(i, x);
            worst = worst.max(r.lo - a).max(a - r.hi);
        }
        worst
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.ncols();
        if self.col_hi.len() != n || self.cost.len() != n {
            return Err(LpError::Malformed("column vectors differ in length".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.col_lo[j], self.col_hi[j]);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(LpError::Malformed(format!("column {j} has an infinite bound")));
            }
            if !self.cost[j].is_finite() {
                return Err(LpError::Malformed(format!("column {j} has a non-finite cost")));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.lo.is_nan() || r.hi.is_nan() || r.lo == S::infinity() || r.hi == S::neg_infinity() {
                return Err(LpError::Malformed(format!("row {i} has invalid bounds")));
            }
            for &(j, a) in &r.terms {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} references column {j} or has a non-finite entry")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Primal feasibility and optimality tolerance.
    pub tol: f64,
    pub max_iterations: Option<usize>,
    /// Consecutive iterations without objective progress before Bland's
    /// rule takes over.
    pub stall_limit: usize,
    /// Pivots between refactorizations of the basis inverse; `None` uses
    /// twice the row count, at least 100, so a refactorization costs about
    /// as much as the pivots in between.
    pub refactor_every: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iterations: None, stall_limit: 50, refactor_every: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// Cannot happen with finite boxes; kept so callers can match on it.
    Unbounded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub x: Vec<S>,
    pub objective: S,
    /// Lagrangian bound `min over the box of (c − Aᵀy)ᵀx + yᵀs`, a lower
    /// bound on the optimum that holds for any multipliers `y`.
    pub dual_bound: S,
    /// Row multipliers.
    pub duals: Vec<S>,
    pub reduced_costs: Vec<S>,
    /// Sum of bound violations left by phase 1; positive iff infeasible.
    pub infeasibility: S,
    pub iterations: usize,
    /// Basic variables: column `j` or `ncols + i` for the slack of row `i`.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("numerical breakdown after {iterations} iterations: {detail}")]
    Numerical { iterations: usize, detail: String },
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
}

pub fn solve_lp<S: Scalar>(p: &LpProblem<S>, opts: &LpOptions) -> Result<LpSolution<S>, LpError> {
    p.check()?;
    simplex::Engine::new(p, opts).run()
}
