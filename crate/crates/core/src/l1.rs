//! Norm constraint replaced by a Gaussian-projection surrogate.
//!
//! For `A` with i.i.d. standard normal entries, `E ||A x||_1 = c m ||x||_2`
//! with `c = sqrt(2/pi)`, so `||A x_i||_1 = c m` stands in for `||x_i|| = 1`.
//! The solver penalizes `(||A x_i||_1 - c m)^2` with weight `lambda / (2 m^2)`
//! and smooths `|t|` to `sqrt(t^2 + eps^2)` so L-BFGS can be used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThomsonError};
use crate::geometry::{energy_and_gradient, norm, residual_of, Configuration};
use crate::relaxation::{ContinuationSchedule, Stage};
use crate::solution::{SphereSolution, StageSummary, StageTrace};
use crate::solvers::{lbfgs_monitored, SolveReport, SolverOptions};

/// First absolute moment of the standard normal, `sqrt(2/pi)`.
pub const ABS_MOMENT: f64 = 0.797_884_560_802_865_4;
pub const SMOOTHING: f64 = 1e-6;
pub const DEFAULT_ROWS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionEnsemble {
    m: usize,
    k: usize,
    seed: u64,
    /// Row-major `m x k`.
    a: Vec<f64>,
}

impl ProjectionEnsemble {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[f64] {
        &self.a
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.k..(r + 1) * self.k]
    }

    /// `||A x||_1`.
    pub fn l1_norm(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.a.chunks_exact(self.k).map(|r| crate::geometry::dot(r, x).abs()).sum())
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.k {
            return Err(ThomsonError::DimensionMismatch { expected: self.k, got: x.len() });
        }
        Ok(())
    }

    /// Smoothed `||A x||_1` and its gradient, written into `grad`.
    fn smooth_l1(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut s = 0.0;
        for r in self.a.chunks_exact(self.k) {
            let t = crate::geometry::dot(r, x);
            let h = (t * t + SMOOTHING * SMOOTHING).sqrt();
            s += h;
            let w = t / h;
            grad.iter_mut().zip(r).for_each(|(g, a)| *g += w * a);
        }
        s
    }
}

pub fn make_ensemble(m: usize, k: usize, seed: u64) -> Result<ProjectionEnsemble> {
    if m == 0 {
        return Err(ThomsonError::InvalidOptions("ensemble needs at least one row".into()));
    }
    if k < 2 {
        return Err(ThomsonError::DimensionMismatch { expected: 2, got: k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (0..m * k).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(ProjectionEnsemble { m, k, seed, a })
}

/// `||A x||_1 - c m`.
pub fn l1_residual(ens: &ProjectionEnsemble, x: &[f64]) -> Result<f64> {
    Ok(ens.l1_norm(x)? - ABS_MOMENT * ens.m as f64)
}

/// Default schedule: lambda 1, 10, 100, 1000.
pub fn default_l1_schedule() -> ContinuationSchedule {
    ContinuationSchedule::new(vec![
        Stage { lambda: 1.0, inner_grad_tol: 1e-3 },
        Stage { lambda: 10.0, inner_grad_tol: 1e-4 },
        Stage { lambda: 100.0, inner_grad_tol: 1e-6 },
        Stage { lambda: 1000.0, inner_grad_tol: 1e-8 },
    ])
    .expect("static schedule is valid")
}

/// Energy plus `lambda / (2 m^2) sum_i (S(x_i) - c m)^2`, with `S` the
/// smoothed l1 norm of `A x_i`.
pub fn l1_objective_and_gradient(
    coords: &[f64],
    ens: &ProjectionEnsemble,
    lambda: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let k = ens.k;
    if !coords.len().is_multiple_of(k) {
        return Err(ThomsonError::DimensionMismatch { expected: k, got: coords.len() });
    }
    let mut f = energy_and_gradient(coords, k, grad)?;
    let m = ens.m as f64;
    let w = lambda / (m * m);
    let mut gs = vec![0.0; k];
    for (x, g) in coords.chunks_exact(k).zip(grad.chunks_exact_mut(k)) {
        let r = ens.smooth_l1(x, &mut gs) - ABS_MOMENT * m;
        f += 0.5 * w * r * r;
        g.iter_mut().zip(&gs).for_each(|(gi, si)| *gi += w * r * si);
    }
    Ok(f)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1Solution {
    pub solution: SphereSolution,
    /// `l1_residual` of every final point.
    pub l1_residuals: Vec<f64>,
    /// `| ||x_i|| - 1 |` of every final point.
    pub norm_deviations: Vec<f64>,
}

impl L1Solution {
    pub fn max_l1_residual(&self) -> f64 {
        self.l1_residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.norm_deviations.iter().copied().fold(0.0, f64::max)
    }
}

/// Penalty continuation on the surrogate constraint.
pub fn l1_penalty_solve(
    cfg0: &Configuration,
    ens: &ProjectionEnsemble,
    schedule: &ContinuationSchedule,
    opts: &SolverOptions,
) -> Result<L1Solution> {
    let k = cfg0.k();
    if ens.k != k {
        return Err(ThomsonError::DimensionMismatch { expected: k, got: ens.k });
    }
    opts.validate()?;
    let mut x = cfg0.coords().to_vec();
    let mut trace = StageTrace::new();
    let mut stages = Vec::new();
    let mut last: Option<SolveReport> = None;
    for stage in schedule.stages() {
        let inner = SolverOptions { grad_tol: stage.inner_grad_tol, ..opts.clone() };
        let report = lbfgs_monitored(
            |x: &[f64], g: &mut [f64]| l1_objective_and_gradient(x, ens, stage.lambda, g),
            &x,
            &inner,
            |x| residual_of(x, k),
        )?;
        trace.append(&report);
        stages.push(StageSummary {
            lambda: stage.lambda,
            inner_grad_tol: stage.inner_grad_tol,
            objective: report.final_value,
            residual: residual_of(&report.final_point, k),
            iterations: report.iterations,
            stop_reason: report.stop_reason,
        });
        x.clone_from(&report.final_point);
        last = Some(report);
    }
    let last = last.ok_or(ThomsonError::ScheduleEmpty)?;
    let l1_residuals = x.chunks_exact(k).map(|p| l1_residual(ens, p)).collect::<Result<Vec<_>>>()?;
    let norm_deviations = x.chunks_exact(k).map(|p| (norm(p) - 1.0).abs()).collect();
    let report = SolveReport {
        final_point: x.clone(),
        final_value: last.final_value,
        iterations: trace.iterations(),
        stop_reason: last.stop_reason,
        wall_time_s: trace.wall_time(),
        trace: trace.points,
    };
    Ok(L1Solution {
        solution: SphereSolution::from_final(cfg0.with_coords(x)?, report, stages)?,
        l1_residuals,
        norm_deviations,
    })
}
