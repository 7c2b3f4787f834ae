use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ThomsonError};

/// Knobs shared by the smooth solvers. Not every solver reads every field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when `||grad||_2 <= grad_tol`.
    pub grad_tol: f64,
    /// Stop when one iteration lowers the objective by less than this, relatively.
    pub f_rel_tol: f64,
    /// L-BFGS history length.
    pub memory: usize,
    /// First trial step (L-BFGS: length of the first move; projected GD: step size).
    pub step_init: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            grad_tol: 1e-8,
            f_rel_tol: 1e-15,
            memory: 10,
            step_init: 1e-2,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(ThomsonError::InvalidOptions("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol >= 0.0) || !(self.f_rel_tol >= 0.0) {
            return Err(ThomsonError::InvalidOptions(
                "tolerances must be non-negative".into(),
            ));
        }
        if self.memory < 1 {
            return Err(ThomsonError::InvalidOptions("memory must be >= 1".into()));
        }
        if !(self.step_init > 0.0) {
            return Err(ThomsonError::InvalidOptions("step_init must be positive".into()));
        }
        Ok(())
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = tol;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    GradientTol,
    FTol,
    MaxIters,
    /// Nelder-Mead simplex collapsed below its diameter tolerance.
    SimplexSize,
    /// Force relaxation: largest per-point move in a pass fell below tolerance.
    Displacement,
    /// Ran the requested fixed number of iterations (SGD).
    Completed,
}

impl StopReason {
    pub fn converged(self) -> bool {
        self != StopReason::MaxIters
    }
}

/// One row of a convergence trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub f: f64,
    /// NaN for derivative-free solvers.
    pub grad_norm: f64,
    /// NaN when the solver works on a plain vector with no sphere constraint.
    pub residual: f64,
    pub elapsed_s: f64,
}

impl TracePoint {
    /// Everything except the wall-clock column, compared bitwise.
    pub fn same_values(&self, other: &TracePoint) -> bool {
        self.iter == other.iter
            && self.f.to_bits() == other.f.to_bits()
            && self.grad_norm.to_bits() == other.grad_norm.to_bits()
            && self.residual.to_bits() == other.residual.to_bits()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub final_point: Vec<f64>,
    pub final_value: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<TracePoint>,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.stop_reason.converged()
    }
}

/// Writes a trace as CSV with header `iter,f,grad_norm,residual,elapsed_s`.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "f", "grad_norm", "residual", "elapsed_s"])?;
    for t in trace {
        w.write_record([
            t.iter.to_string(),
            t.f.to_string(),
            t.grad_norm.to_string(),
            t.residual.to_string(),
            t.elapsed_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Appends trace rows and stamps elapsed time from a fixed start.
pub(crate) struct TraceRecorder {
    start: Instant,
    pub(crate) points: Vec<TracePoint>,
}

impl TraceRecorder {
    pub(crate) fn new() -> Self {
        Self {
            start: Instant::now(),
            points: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, iter: usize, f: f64, grad_norm: f64, residual: f64) {
        self.points.push(TracePoint {
            iter,
            f,
            grad_norm,
            residual,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
