//! Lagrangian-based solvers cast as generalized prediction-correction
//! iterations, with accelerating penalty schedules and tooling to measure
//! their ergodic convergence rates.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algorithms;
pub mod bench;
pub mod error;
pub mod framework;
pub mod linalg;
pub mod problems;
pub mod scalar;
pub mod schedules;

pub use error::{Error, Result};
pub use scalar::{CompensatedSum, Scalar};

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Vector = linalg::DenseVector<f64>;
pub type Problem = problems::BlockProblem<f64>;
pub type Saddle = problems::SaddlePoint<f64>;
pub type Oracle = problems::BlockOracle<f64>;
pub type Schedule = schedules::PenaltySchedule<f64>;
