use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{constraint_residual, energy, project_to_sphere, Configuration};
use crate::solvers::{SolveReport, StopReason, TracePoint};

/// Result of one solve of the sphere problem, whatever the method.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereSolution {
    /// Final iterate as the solver left it (may sit off the sphere).
    pub configuration: Configuration,
    /// Column-normalized final iterate.
    pub projected: Configuration,
    /// On-sphere energy of `projected`; the number methods are compared by.
    pub energy: f64,
    /// `constraint_residual(configuration)`.
    pub residual: f64,
    pub report: SolveReport,
    /// One entry per continuation stage; empty for single-stage methods.
    pub stages: Vec<StageSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub lambda: f64,
    pub inner_grad_tol: f64,
    /// Stage objective at the stage minimizer.
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

impl SphereSolution {
    pub(crate) fn from_final(
        configuration: Configuration,
        report: SolveReport,
        stages: Vec<StageSummary>,
    ) -> Result<Self> {
        let projected = project_to_sphere(&configuration)?;
        Ok(Self {
            energy: energy(&projected)?.value(),
            residual: constraint_residual(&configuration),
            configuration,
            projected,
            report,
            stages,
        })
    }

    /// True when traces agree on everything except wall-clock columns.
    pub fn same_trace(&self, other: &SphereSolution) -> bool {
        same_trace(&self.report.trace, &other.report.trace)
    }
}

pub fn same_trace(a: &[TracePoint], b: &[TracePoint]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.same_values(q))
}

/// Concatenates stage traces into one, renumbering iterations and shifting
/// elapsed time. The iteration-0 row of every stage after the first is
/// dropped since it restates the previous stage's final point.
pub(crate) struct StageTrace {
    pub(crate) points: Vec<TracePoint>,
    iter_offset: usize,
    time_offset: f64,
}

impl StageTrace {
    pub(crate) fn new() -> Self {
        Self {
            points: Vec::new(),
            iter_offset: 0,
            time_offset: 0.0,
        }
    }

    pub(crate) fn append(&mut self, report: &SolveReport) {
        let skip = usize::from(!self.points.is_empty());
        for t in report.trace.iter().skip(skip) {
            self.points.push(TracePoint {
                iter: t.iter + self.iter_offset,
                elapsed_s: t.elapsed_s + self.time_offset,
                ..*t
            });
        }
        self.iter_offset += report.iterations;
        self.time_offset += report.wall_time_s;
    }

    pub(crate) fn iterations(&self) -> usize {
        self.iter_offset
    }

    pub(crate) fn wall_time(&self) -> f64 {
        self.time_offset
    }
}
