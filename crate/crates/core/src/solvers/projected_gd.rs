//! Gradient descent on the sphere energy with column re-normalization after
//! every step. Each step starts from `step_init` and halves until the
//! projected point satisfies an Armijo condition on the energy.

use super::report::{SolveReport, SolverOptions, StopReason, TraceRecorder};
use crate::error::{Result, ThomsonError};
use crate::geometry::{dot, energy_and_gradient, energy_of, project_coords, residual_of, Configuration, TOL_FEAS};

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Removes from each gradient column its component along the point.
pub fn tangential_gradient(coords: &[f64], grad: &[f64], k: usize) -> Vec<f64> {
    let mut out = grad.to_vec();
    for (x, g) in coords.chunks_exact(k).zip(out.chunks_exact_mut(k)) {
        let radial = dot(x, g);
        g.iter_mut().zip(x).for_each(|(gi, xi)| *gi -= radial * xi);
    }
    out
}

/// Runs projected gradient descent from a feasible configuration.
pub fn projected_gd(cfg0: &Configuration, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    if !cfg0.is_feasible(TOL_FEAS) {
        return Err(ThomsonError::InvalidConfiguration(
            "projected gradient descent needs a feasible start".into(),
        ));
    }
    let k = cfg0.k();
    let mut x = cfg0.coords().to_vec();
    // snap to the sphere exactly so every recorded iterate is feasible
    project_coords(&mut x, k)?;
    let mut g = vec![0.0; x.len()];
    let mut f = energy_and_gradient(&x, k, &mut g)?;
    let mut gt = tangential_gradient(&x, &g, k);
    let mut gt_norm = dot(&gt, &gt).sqrt();
    let mut recorder = TraceRecorder::new();
    recorder.record(0, f, gt_norm, residual_of(&x, k));

    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;
    let mut trial = vec![0.0; x.len()];
    if gt_norm <= opts.grad_tol {
        stop = StopReason::GradientTol;
    } else {
        'outer: for iter in 1..=opts.max_iters {
            let mut step = opts.step_init;
            let mut f_trial = f64::INFINITY;
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                    *t = xi - step * gi;
                }
                if project_coords(&mut trial, k).is_ok() {
                    if let Ok(v) = energy_of(&trial, k) {
                        f_trial = v;
                        if v <= f - ARMIJO_C1 * step * gt_norm * gt_norm {
                            accepted = true;
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                if step * gt_norm * gt_norm <= 4.0 * f64::EPSILON * f.abs().max(1.0) {
                    stop = StopReason::FTol;
                    break 'outer;
                }
                return Err(ThomsonError::LineSearchFailure {
                    iteration: iter,
                    trials: MAX_HALVINGS,
                });
            }
            let rel_decrease = (f - f_trial) / f.abs().max(1.0);
            std::mem::swap(&mut x, &mut trial);
            f = energy_and_gradient(&x, k, &mut g)?;
            gt = tangential_gradient(&x, &g, k);
            gt_norm = dot(&gt, &gt).sqrt();
            iterations = iter;
            recorder.record(iter, f, gt_norm, residual_of(&x, k));
            if gt_norm <= opts.grad_tol {
                stop = StopReason::GradientTol;
                break;
            }
            if rel_decrease < opts.f_rel_tol {
                stop = StopReason::FTol;
                break;
            }
        }
    }

    Ok(SolveReport {
        final_point: x,
        final_value: f,
        iterations,
        stop_reason: stop,
        wall_time_s: recorder.elapsed(),
        trace: recorder.points,
    })
}
