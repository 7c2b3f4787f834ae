//! Unconstrained and projection-based minimizers.

mod lbfgs;
mod line_search;
mod nelder_mead;
mod projected_gd;
mod report;

pub use lbfgs::{lbfgs, lbfgs_monitored};
pub use nelder_mead::{nelder_mead, SIMPLEX_TOL};
pub use projected_gd::{projected_gd, tangential_gradient};
pub use report::{write_trace_csv, SolveReport, SolverOptions, StopReason, TracePoint};
pub(crate) use report::TraceRecorder;

