//! Penalty and augmented-Lagrangian relaxations of the unit-norm
//! constraint, solved by L-BFGS over an increasing sequence of penalty
//! weights with warm starts.
//!
//! Penalized objective:
//!
//! ```text
//! f(X) + (lambda / 2) sum_i (||x_i||^2 - 1)^2
//! ```
//!
//! with exact gradient `grad f + 2 lambda (||x_i||^2 - 1) x_i`. The augmented
//! Lagrangian subtracts `sum_i mu_i (||x_i||^2 - 1)`, adding `-2 mu_i x_i`
//! to the gradient. Multipliers are updated after each stage with
//! `mu_i <- mu_i - lambda (||x_i||^2 - 1)`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ThomsonError};
use crate::geometry::{dot, energy_and_gradient, energy_of, residual_of, Configuration};
use crate::solution::{SphereSolution, StageSummary, StageTrace};
use crate::solvers::{lbfgs_monitored, SolveReport, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub lambda: f64,
    pub inner_grad_tol: f64,
}

/// Ordered `(lambda, inner tolerance)` stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Stage>", into = "Vec<Stage>")]
pub struct ContinuationSchedule {
    stages: Vec<Stage>,
}

impl TryFrom<Vec<Stage>> for ContinuationSchedule {
    type Error = ThomsonError;

    fn try_from(stages: Vec<Stage>) -> Result<Self> {
        Self::new(stages)
    }
}

impl From<ContinuationSchedule> for Vec<Stage> {
    fn from(s: ContinuationSchedule) -> Self {
        s.stages
    }
}

impl ContinuationSchedule {
    /// Lambda must be positive and strictly increasing; tolerances positive
    /// and non-increasing.
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(ThomsonError::ScheduleEmpty);
        }
        for s in &stages {
            if !(s.lambda > 0.0 && s.lambda.is_finite()) || !(s.inner_grad_tol > 0.0) {
                return Err(ThomsonError::InvalidSchedule(format!(
                    "stage ({}, {}) needs positive finite values",
                    s.lambda, s.inner_grad_tol
                )));
            }
        }
        for w in stages.windows(2) {
            if !(w[1].lambda > w[0].lambda) {
                return Err(ThomsonError::InvalidSchedule(
                    "lambda must be strictly increasing".into(),
                ));
            }
            if w[1].inner_grad_tol > w[0].inner_grad_tol {
                return Err(ThomsonError::InvalidSchedule(
                    "inner tolerance must be non-increasing".into(),
                ));
            }
        }
        Ok(Self { stages })
    }

    /// `count` stages starting at `lambda0`, each `growth` times the last;
    /// tolerances taper geometrically from `tol0` to `tol_final`.
    pub fn geometric(lambda0: f64, growth: f64, count: usize, tol0: f64, tol_final: f64) -> Result<Self> {
        if count == 0 {
            return Err(ThomsonError::ScheduleEmpty);
        }
        if !(growth > 1.0) {
            return Err(ThomsonError::InvalidSchedule("growth must exceed 1".into()));
        }
        let ratio = if count > 1 {
            (tol_final / tol0).powf(1.0 / (count - 1) as f64)
        } else {
            1.0
        };
        let stages = (0..count)
            .map(|s| Stage {
                lambda: lambda0 * growth.powi(s as i32),
                inner_grad_tol: if s + 1 == count { tol_final } else { tol0 * ratio.powi(s as i32) },
            })
            .collect();
        Self::new(stages)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn final_lambda(&self) -> f64 {
        self.stages.last().map_or(0.0, |s| s.lambda)
    }
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        let stages = [
            (1.0, 1e-3),
            (10.0, 1e-4),
            (100.0, 1e-6),
            (1e3, 1e-8),
            (1e4, 1e-8),
            (1e5, 1e-8),
        ]
        .into_iter()
        .map(|(lambda, inner_grad_tol)| Stage { lambda, inner_grad_tol })
        .collect();
        Self { stages }
    }
}

/// Parses `"1,10,100"` or `"1:1e-3,10:1e-4"`. Stages without an explicit
/// tolerance get the default schedule's tolerance for the same position
/// (the last one for positions past its end).
impl FromStr for ContinuationSchedule {
    type Err = ThomsonError;

    fn from_str(s: &str) -> Result<Self> {
        let defaults = ContinuationSchedule::default();
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| ThomsonError::InvalidSchedule(format!("cannot parse '{v}'")))
        };
        let mut stages = Vec::new();
        for (i, item) in s.split(',').filter(|t| !t.trim().is_empty()).enumerate() {
            let (lambda, tol) = match item.split_once(':') {
                Some((l, t)) => (parse(l)?, parse(t)?),
                None => {
                    let d = defaults.stages.get(i).or(defaults.stages.last()).unwrap();
                    (parse(item)?, d.inner_grad_tol)
                }
            };
            stages.push(Stage {
                lambda,
                inner_grad_tol: tol,
            });
        }
        Self::new(stages)
    }
}

/// One multiplier per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers(Vec<f64>);

impl Multipliers {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(ThomsonError::InvalidOptions("non-finite multiplier".into()));
        }
        Ok(Self(mu))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `mu_i <- mu_i - lambda (||x_i||^2 - 1)`.
    pub fn update(&mut self, cfg: &Configuration, lambda: f64) {
        for (m, p) in self.0.iter_mut().zip(cfg.points()) {
            *m -= lambda * (dot(p, p) - 1.0);
        }
    }
}

/// Value and gradient of the augmented Lagrangian on raw coordinates;
/// `mu = None` gives the plain penalty objective.
pub fn auglag_value_and_gradient(
    coords: &[f64],
    k: usize,
    lambda: f64,
    mu: Option<&[f64]>,
    grad: &mut [f64],
) -> Result<f64> {
    let mut f = energy_and_gradient(coords, k, grad)?;
    for (i, (x, g)) in coords.chunks_exact(k).zip(grad.chunks_exact_mut(k)).enumerate() {
        let c = dot(x, x) - 1.0;
        let m = mu.map_or(0.0, |m| m[i]);
        f += 0.5 * lambda * c * c - m * c;
        let scale = 2.0 * lambda * c - 2.0 * m;
        g.iter_mut().zip(x).for_each(|(gi, xi)| *gi += scale * xi);
    }
    Ok(f)
}

pub(crate) fn auglag_value(coords: &[f64], k: usize, lambda: f64, mu: Option<&[f64]>) -> Result<f64> {
    let mut f = energy_of(coords, k)?;
    for (i, x) in coords.chunks_exact(k).enumerate() {
        let c = dot(x, x) - 1.0;
        let m = mu.map_or(0.0, |m| m[i]);
        f += 0.5 * lambda * c * c - m * c;
    }
    Ok(f)
}

fn check_mu(cfg: &Configuration, mu: &Multipliers) -> Result<()> {
    if mu.0.len() != cfg.n() {
        return Err(ThomsonError::DimensionMismatch {
            expected: cfg.n(),
            got: mu.0.len(),
        });
    }
    Ok(())
}

/// `f(X) + (lambda/2) sum_i (||x_i||^2 - 1)^2`.
pub fn penalty_objective(cfg: &Configuration, lambda: f64) -> Result<f64> {
    auglag_value(cfg.coords(), cfg.k(), lambda, None)
}

/// Exact derivative of [`penalty_objective`].
pub fn penalty_gradient(cfg: &Configuration, lambda: f64) -> Result<Configuration> {
    let mut g = vec![0.0; cfg.coords().len()];
    auglag_value_and_gradient(cfg.coords(), cfg.k(), lambda, None, &mut g)?;
    cfg.with_coords(g)
}

/// Penalty objective minus `sum_i mu_i (||x_i||^2 - 1)`.
pub fn auglag_objective(cfg: &Configuration, lambda: f64, mu: &Multipliers) -> Result<f64> {
    check_mu(cfg, mu)?;
    auglag_value(cfg.coords(), cfg.k(), lambda, Some(&mu.0))
}

pub fn auglag_gradient(cfg: &Configuration, lambda: f64, mu: &Multipliers) -> Result<Configuration> {
    check_mu(cfg, mu)?;
    let mut g = vec![0.0; cfg.coords().len()];
    auglag_value_and_gradient(cfg.coords(), cfg.k(), lambda, Some(&mu.0), &mut g)?;
    cfg.with_coords(g)
}

fn stage_solve(
    x: &[f64],
    k: usize,
    stage: &Stage,
    mu: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let inner = SolverOptions {
        grad_tol: stage.inner_grad_tol,
        ..opts.clone()
    };
    lbfgs_monitored(
        |x: &[f64], g: &mut [f64]| auglag_value_and_gradient(x, k, stage.lambda, mu, g),
        x,
        &inner,
        |x| residual_of(x, k),
    )
}

fn continuation(
    cfg0: &Configuration,
    schedule: &ContinuationSchedule,
    opts: &SolverOptions,
    mut mu: Option<Multipliers>,
) -> Result<SphereSolution> {
    let k = cfg0.k();
    if let Some(m) = &mu {
        check_mu(cfg0, m)?;
    }
    let mut x = cfg0.coords().to_vec();
    let mut trace = StageTrace::new();
    let mut summaries = Vec::with_capacity(schedule.stages.len());
    let mut last = None;
    for stage in &schedule.stages {
        let report = stage_solve(&x, k, stage, mu.as_ref().map(|m| m.values()), opts)?;
        trace.append(&report);
        let cfg = cfg0.with_coords(report.final_point.clone())?;
        summaries.push(StageSummary {
            lambda: stage.lambda,
            inner_grad_tol: stage.inner_grad_tol,
            objective: report.final_value,
            residual: residual_of(&report.final_point, k),
            iterations: report.iterations,
            stop_reason: report.stop_reason,
        });
        if let Some(m) = mu.as_mut() {
            m.update(&cfg, stage.lambda);
        }
        x.clone_from(&report.final_point);
        last = Some(report);
    }
    let last = last.ok_or(ThomsonError::ScheduleEmpty)?;
    let report = SolveReport {
        final_point: x.clone(),
        final_value: last.final_value,
        iterations: trace.iterations(),
        stop_reason: last.stop_reason,
        wall_time_s: trace.wall_time(),
        trace: trace.points,
    };
    SphereSolution::from_final(cfg0.with_coords(x)?, report, summaries)
}

/// Penalty continuation: each stage warm-starts from the previous minimizer.
pub fn penalty_solve(
    cfg0: &Configuration,
    schedule: &ContinuationSchedule,
    opts: &SolverOptions,
) -> Result<SphereSolution> {
    continuation(cfg0, schedule, opts, None)
}

/// Augmented-Lagrangian continuation starting from `mu = 0`.
pub fn auglag_solve(
    cfg0: &Configuration,
    schedule: &ContinuationSchedule,
    opts: &SolverOptions,
) -> Result<SphereSolution> {
    continuation(cfg0, schedule, opts, Some(Multipliers::zeros(cfg0.n())))
}
