//! Safeguarded Newton iteration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{DenseMatrix, LuFactors};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Step halvings tried before the iteration is declared stalled.
    pub max_halvings: usize,
    /// Take the first step in full regardless of the residual, which
    /// satisfies every linear equation of the system at once.
    pub full_first_step: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 100, max_halvings: 40, full_first_step: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    /// Residual ∞-norm at `x`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NewtonFailure {
    Singular { iterations: usize, residual: f64 },
    Stalled { iterations: usize, residual: f64 },
    IterationLimit { iterations: usize, residual: f64 },
}

impl fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Singular { iterations, residual } => {
                write!(f, "singular Jacobian after {iterations} iterations, residual {residual:.3e}")
            }
            Self::Stalled { iterations, residual } => {
                write!(f, "no descent step after {iterations} iterations, residual {residual:.3e}")
            }
            Self::IterationLimit { iterations, residual } => {
                write!(f, "iteration limit {iterations} reached, residual {residual:.3e}")
            }
        }
    }
}

fn norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Newton's method on `residual(x) = 0` with step halving whenever a full
/// step fails to reduce the residual ∞-norm or leaves the admissible set.
pub fn newton(
    x0: &[f64],
    residual: impl Fn(&[f64]) -> Vec<f64>,
    jacobian: impl Fn(&[f64]) -> DenseMatrix<f64>,
    admissible: impl Fn(&[f64]) -> bool,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, NewtonFailure> {
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut rn = norm(&r);
    for it in 0..opts.max_iterations {
        if rn <= opts.tol {
            return Ok(NewtonOutcome { x, residual: rn, iterations: it });
        }
        let lu = LuFactors::factorize(jacobian(&x), 1e-14)
            .map_err(|_| NewtonFailure::Singular { iterations: it, residual: rn })?;
        let dx = lu.solve(&r);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - step * d).collect();
            if admissible(&trial) {
                let tr = residual(&trial);
                let tn = norm(&tr);
                if tn < rn || (it == 0 && opts.full_first_step && tn.is_finite()) {
                    x = trial;
                    r = tr;
                    rn = tn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(NewtonFailure::Stalled { iterations: it + 1, residual: rn });
        }
    }
    if rn <= opts.tol {
        return Ok(NewtonOutcome { x, residual: rn, iterations: opts.max_iterations });
    }
    Err(NewtonFailure::IterationLimit { iterations: opts.max_iterations, residual: rn })
}
