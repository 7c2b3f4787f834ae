//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Two-loop recursion with initial scaling `gamma = s'y / y'y`; curvature
//! pairs with `s'y <= eps * y'y` are skipped. A failed line search clears
//! the history and retries along steepest descent before giving up.

use std::collections::VecDeque;

use super::line_search::{self, Outcome};
use super::report::{SolveReport, SolverOptions, StopReason, TraceRecorder};
use crate::error::{Result, ThomsonError};
use crate::geometry::dot;

pub(crate) struct History {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl History {
    pub(crate) fn new(capacity: usize) -> Self {
        Self {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    pub(crate) fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if !(sy > f64::EPSILON * yy) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    pub(crate) fn clear(&mut self) {
        self.pairs.clear();
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `-H g` by the two-loop recursion.
    pub(crate) fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// Minimizes `obj`, which writes the gradient into its second argument and
/// returns the value.
pub fn lbfgs<F>(obj: F, x0: &[f64], opts: &SolverOptions) -> Result<SolveReport>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    lbfgs_monitored(obj, x0, opts, |_| f64::NAN)
}

/// As [`lbfgs`], with `residual(x)` recorded in every trace row.
pub fn lbfgs_monitored<F, M>(
    mut obj: F,
    x0: &[f64],
    opts: &SolverOptions,
    residual: M,
) -> Result<SolveReport>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
    M: Fn(&[f64]) -> f64,
{
    opts.validate()?;
    let dim = x0.len();
    let mut recorder = TraceRecorder::new();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; dim];
    let mut f = obj(&x, &mut g)?;
    if !f.is_finite() {
        return Err(ThomsonError::NonFiniteObjective {
            evaluation: 0,
            value: f,
        });
    }
    let mut g_norm = dot(&g, &g).sqrt();
    recorder.record(0, f, g_norm, residual(&x));

    let mut history = History::new(opts.memory);
    let mut x_new = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];
    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;

    if g_norm <= opts.grad_tol {
        stop = StopReason::GradientTol;
    } else {
        for iter in 1..=opts.max_iters {
            let mut accepted = None;
            // at most two attempts: quasi-Newton direction, then steepest descent
            for attempt in 0..2 {
                let steepest = attempt == 1 || history.is_empty();
                if steepest {
                    history.clear();
                }
                let mut d = if steepest {
                    g.iter().map(|v| -v).collect()
                } else {
                    history.direction(&g)
                };
                let mut dphi0 = dot(&g, &d);
                if !(dphi0 < 0.0) {
                    history.clear();
                    d = g.iter().map(|v| -v).collect();
                    dphi0 = -g_norm * g_norm;
                }
                let alpha_init = if steepest {
                    opts.step_init / g_norm
                } else {
                    1.0
                };
                match line_search::strong_wolfe(
                    &mut obj, &x, f, dphi0, &d, alpha_init, &mut x_new, &mut g_new,
                ) {
                    Outcome::Accepted(a) => {
                        for ((xn, xi), di) in x_new.iter_mut().zip(&x).zip(&d) {
                            *xn = xi + a.alpha * di;
                        }
                        accepted = Some(a.f);
                        break;
                    }
                    Outcome::Failed { min_alpha } => {
                        if attempt == 1 || history.is_empty() {
                            // predicted decrease below rounding: nothing left to gain
                            if min_alpha * dphi0.abs() <= 4.0 * f64::EPSILON * f.abs().max(1.0) {
                                stop = StopReason::FTol;
                                break;
                            }
                            return Err(ThomsonError::LineSearchFailure {
                                iteration: iter,
                                trials: line_search::MAX_TRIALS,
                            });
                        }
                    }
                }
            }
            let Some(f_new) = accepted else {
                break;
            };

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            history.push(s, y);

            let rel_decrease = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;
            g_norm = dot(&g, &g).sqrt();
            iterations = iter;
            recorder.record(iter, f, g_norm, residual(&x));

            if g_norm <= opts.grad_tol {
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

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn rosenbrock(x: &[f64], g: &mut [f64]) -> Result<f64> {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        Ok((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2))
    }

    #[test]
    fn shifted_quadratic_converges_fast() {
        let target = [1.0, 2.0, 3.0];
        let obj = |x: &[f64], g: &mut [f64]| -> Result<f64> {
            let mut f = 0.0;
            for i in 0..3 {
                let d = x[i] - target[i];
                g[i] = 2.0 * d;
                f += d * d;
            }
            Ok(f)
        };
        let r = lbfgs(obj, &[0.0; 3], &SolverOptions::default()).unwrap();
        assert!(r.final_value < 1e-16, "{}", r.final_value);
        assert!(r.iterations <= 3, "{} iterations", r.iterations);
        assert_eq!(r.stop_reason, StopReason::GradientTol);
        assert_eq!(r.iterations + 1, r.trace.len());
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let r = lbfgs(rosenbrock, &[-1.2, 1.0], &SolverOptions::default()).unwrap();
        assert!((r.final_point[0] - 1.0).abs() < 1e-6);
        assert!((r.final_point[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn objective_is_monotone() {
        let r = lbfgs(rosenbrock, &[-1.2, 1.0], &SolverOptions::default()).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].f <= w[0].f);
        }
    }

    #[test]
    fn deterministic_traces() {
        let a = lbfgs(rosenbrock, &[-1.2, 1.0], &SolverOptions::default()).unwrap();
        let b = lbfgs(rosenbrock, &[-1.2, 1.0], &SolverOptions::default()).unwrap();
        assert_eq!(a.trace.len(), b.trace.len());
        assert!(a.trace.iter().zip(&b.trace).all(|(p, q)| p.same_values(q)));
    }

    #[test]
    fn wrong_gradient_fails_line_search() {
        // gradient with the wrong sign is an ascent direction every time
        let obj = |x: &[f64], g: &mut [f64]| -> Result<f64> {
            g[0] = -2.0 * x[0];
            Ok(x[0] * x[0] + 1.0)
        };
        let err = lbfgs(obj, &[3.0], &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, ThomsonError::LineSearchFailure { .. }));
    }

    fn random_spd(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let m: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        let s: f64 = (0..dim).map(|l| m[l][i] * m[l][j]).sum();
                        s + if i == j { 0.5 } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    }

    fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        a.iter().map(|row| dot(row, v)).collect()
    }

    #[test]
    fn exact_line_search_on_quadratic_terminates_within_dim_steps() {
        // with memory >= dim and exact steps, the two-loop directions are
        // conjugate, so the minimizer is reached after at most dim steps
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 2..=8 {
            let a = random_spd(dim, &mut rng);
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let grad = |x: &[f64]| -> Vec<f64> {
                mat_vec(&a, x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect()
            };
            let mut x = vec![0.0; dim];
            let mut hist = History::new(dim);
            let mut g = grad(&x);
            for _ in 0..dim {
                let d = hist.direction(&g);
                let ad = mat_vec(&a, &d);
                let step = -dot(&g, &d) / dot(&d, &ad);
                let s: Vec<f64> = d.iter().map(|v| step * v).collect();
                x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
                let g_next = grad(&x);
                let y = g_next.iter().zip(&g).map(|(p, q)| p - q).collect();
                hist.push(s, y);
                g = g_next;
            }
            let resid = dot(&g, &g).sqrt();
            assert!(resid < 1e-9, "dim {dim}: gradient norm {resid}");
        }
    }

    #[test]
    fn lbfgs_solves_random_quadratics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 2..=8 {
            let a = random_spd(dim, &mut rng);
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let obj = |x: &[f64], g: &mut [f64]| -> Result<f64> {
                let ax = mat_vec(&a, x);
                for i in 0..x.len() {
                    g[i] = ax[i] - b[i];
                }
                Ok(0.5 * dot(x, &ax) - dot(&b, x))
            };
            let r = lbfgs(obj, &vec![0.0; dim], &SolverOptions::default()).unwrap();
            let resid = mat_vec(&a, &r.final_point);
            for (ri, bi) in resid.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-7);
            }
        }
    }
}
