//! Minimum-energy configurations of `n` points on the unit sphere in R^k
//! under the inverse-square pair potential `sum_{i<j} 1 / ||x_i - x_j||^2`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod force;
pub mod geometry;
pub mod gradcheck;
pub mod harness;
pub mod l1;
pub mod packing;
pub mod solvers;

pub use error::{Result, ThomsonError};
pub use geometry::{AngularConfiguration, Configuration, EnergyValue};
pub use solvers::{SolveReport, SolverOptions, StopReason, TracePoint};
pub mod relaxation;
pub mod solution;
pub mod stochastic;

pub use harness::{BenchmarkSpec, BenchmarkTable, Method, RunOutput, RunReport, RunSpec};
pub use solution::SphereSolution;
