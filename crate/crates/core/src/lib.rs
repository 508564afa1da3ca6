//! Decentralized energy supply network design.
//!
//! Numeric kernels are generic over [`scalar::Scalar`]; the aliases below fix
//! them to `f64`, which is what the data model and the solver use.

// Index loops mirror the formulas; negated comparisons are how NaN is rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod costing;
pub mod formulation;
pub mod instance;
pub mod linalg;
pub mod lp;
pub mod physics;
pub mod plan;
pub mod relaxation;
pub mod scalar;
pub mod solver;

pub use scalar::Scalar;

pub type DenseMatrix = linalg::DenseMatrix<f64>;
pub type LuFactors = linalg::LuFactors<f64>;
pub type LpRow = lp::LpRow<f64>;
pub type LpProblem = lp::LpProblem<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type EnvelopeCut = relaxation::EnvelopeCut<f64>;
