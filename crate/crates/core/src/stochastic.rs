//! Pair-sampling stochastic gradient descent on the penalized objective.
//!
//! Each iteration draws an unordered pair `{i, l}` uniformly and moves both
//! points by `-gamma (n - 1)` times their pair gradient
//!
//! ```text
//! g_il = -2 (x_i - x_l) / ||x_i - x_l||^4 + lambda / (n - 1) (||x_i||^2 - 1) x_i
//! ```
//!
//! with `g_li` obtained by swapping roles. Both updates read the positions
//! from before the step. Summed over all partners, `g_il` gives the full
//! repulsion gradient plus `lambda (||x_i||^2 - 1) x_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThomsonError};
use crate::geometry::{dot, residual_of, Configuration};
use crate::relaxation::auglag_value_and_gradient;
use crate::solution::SphereSolution;
use crate::solvers::{SolveReport, StopReason, TraceRecorder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSchedule {
    Constant,
    /// Constant for the first 20% of iterations, then `gamma t0 / (t0 + t)`
    /// with `t` counted from the end of burn-in.
    InverseTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdOptions {
    pub lambda: f64,
    pub gamma: f64,
    pub iters: usize,
    pub seed: u64,
    pub schedule: StepSchedule,
    /// Decay offset `t0`; `None` uses the burn-in length.
    pub t0: Option<usize>,
    /// Record the full penalized objective every this many iterations.
    pub trace_every: usize,
    /// Upper bound on the scaled step `gamma (n - 1)`.
    pub max_scaled_step: f64,
    /// Longest distance a single update may move one point.
    pub max_displacement: f64,
}

impl Default for SgdOptions {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            gamma: 1e-3,
            iters: 200_000,
            seed: 0,
            schedule: StepSchedule::InverseTime,
            t0: None,
            trace_every: 100,
            max_scaled_step: 0.1,
            max_displacement: 0.05,
        }
    }
}

impl SgdOptions {
    /// Parameters that work across `n`: the penalty weight grows with `n` so
    /// the equilibrium residual stays near 5e-3, and `gamma lambda` is held
    /// fixed so the radial dynamics stay stable.
    pub fn tuned(n: usize) -> Self {
        let lambda = (200.0 * n as f64).max(100.0);
        let iters = (2000 * n * n).max(1_000_000);
        Self {
            lambda,
            gamma: 0.04 / lambda,
            iters,
            trace_every: (iters / 2000).max(100),
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ThomsonError::InvalidOptions("lambda must be finite and >= 0".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(ThomsonError::InvalidOptions("gamma must be positive".into()));
        }
        if !(self.max_displacement > 0.0) {
            return Err(ThomsonError::InvalidOptions("max_displacement must be positive".into()));
        }
        if self.trace_every == 0 {
            return Err(ThomsonError::InvalidOptions("trace_every must be >= 1".into()));
        }
        let scaled = self.gamma * (n.saturating_sub(1)) as f64;
        if !(scaled <= self.max_scaled_step) {
            return Err(ThomsonError::InvalidOptions(format!(
                "gamma (n - 1) = {scaled:e} exceeds the bound {:e}",
                self.max_scaled_step
            )));
        }
        Ok(())
    }

    /// Step size at (1-based) iteration `t`.
    pub fn step_at(&self, t: usize) -> f64 {
        match self.schedule {
            StepSchedule::Constant => self.gamma,
            StepSchedule::InverseTime => {
                let burn_in = self.iters / 5;
                if t <= burn_in {
                    self.gamma
                } else {
                    let t0 = self.t0.unwrap_or(burn_in).max(1) as f64;
                    self.gamma * t0 / (t0 + (t - burn_in) as f64)
                }
            }
        }
    }
}

fn clip(step: f64, grad_norm: f64, cap: f64) -> f64 {
    if step * grad_norm > cap {
        cap / grad_norm
    } else {
        step
    }
}

/// Draws an ordered pair of distinct indices; the unordered pair is uniform.
pub fn sample_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    assert!(n >= 2, "need at least two points to sample a pair");
    let i = rng.random_range(0..n);
    let mut l = rng.random_range(0..n - 1);
    if l >= i {
        l += 1;
    }
    (i, l)
}

/// Pair gradient for point `i` against partner `l`.
pub fn pair_gradient(cfg: &Configuration, i: usize, l: usize, lambda: f64) -> Result<Vec<f64>> {
    let n = cfg.n();
    for idx in [i, l] {
        if idx >= n {
            return Err(ThomsonError::IndexError { index: idx, n });
        }
    }
    if i == l {
        return Err(ThomsonError::CoincidentPoints { i, j: l, distance: 0.0 });
    }
    let (xi, xl) = (cfg.point(i), cfg.point(l));
    let d2: f64 = xi.iter().zip(xl).map(|(a, b)| (a - b) * (a - b)).sum();
    if !(d2 >= crate::geometry::DIST_FLOOR * crate::geometry::DIST_FLOOR) {
        return Err(ThomsonError::CoincidentPoints {
            i,
            j: l,
            distance: d2.sqrt(),
        });
    }
    let rep = -2.0 / (d2 * d2);
    let pen = lambda / (n - 1) as f64 * (dot(xi, xi) - 1.0);
    Ok(xi
        .iter()
        .zip(xl)
        .map(|(a, b)| rep * (a - b) + pen * a)
        .collect())
}

/// Pair objective `1/d^2 + lambda/(4(n-1)) (c_i^2 + c_l^2)` whose gradients
/// with respect to `x_i` and `x_l` are the two pair gradients.
pub fn pair_objective(cfg: &Configuration, i: usize, l: usize, lambda: f64) -> Result<f64> {
    let n = cfg.n();
    for idx in [i, l] {
        if idx >= n {
            return Err(ThomsonError::IndexError { index: idx, n });
        }
    }
    let (xi, xl) = (cfg.point(i), cfg.point(l));
    let d2: f64 = xi.iter().zip(xl).map(|(a, b)| (a - b) * (a - b)).sum();
    if i == l || !(d2 >= crate::geometry::DIST_FLOOR * crate::geometry::DIST_FLOOR) {
        return Err(ThomsonError::CoincidentPoints { i, j: l, distance: d2.sqrt() });
    }
    let (ci, cl) = (dot(xi, xi) - 1.0, dot(xl, xl) - 1.0);
    Ok(1.0 / d2 + lambda / (4.0 * (n - 1) as f64) * (ci * ci + cl * cl))
}

/// Runs pair-sampling SGD. The trace `f` column is the penalized objective
/// `f(X) + (lambda/2) sum (||x_i||^2 - 1)^2`, `grad_norm` its full gradient norm.
pub fn sgd_solve(cfg0: &Configuration, opts: &SgdOptions) -> Result<SphereSolution> {
    let (n, k) = (cfg0.n(), cfg0.k());
    opts.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = cfg0.coords().to_vec();
    let mut grad = vec![0.0; x.len()];
    let mut recorder = TraceRecorder::new();
    let observe = |x: &[f64], grad: &mut [f64], iter: usize, rec: &mut TraceRecorder| -> Result<f64> {
        let f = auglag_value_and_gradient(x, k, opts.lambda, None, grad)?;
        rec.record(iter, f, dot(grad, grad).sqrt(), residual_of(x, k));
        Ok(f)
    };
    let f_init = observe(&x, &mut grad, 0, &mut recorder)?;
    let scale = (n - 1) as f64;
    let pen_coef = opts.lambda / scale;
    let mut diff = vec![0.0; k];
    let (mut ga, mut gb) = (vec![0.0; k], vec![0.0; k]);
    let mut f_last = f_init;

    for t in 1..=opts.iters {
        let (i, l) = sample_pair(n, &mut rng);
        let step = opts.step_at(t) * scale;
        let (lo, hi) = (i.min(l), i.max(l));
        let (head, tail) = x.split_at_mut(hi * k);
        let a = &mut head[lo * k..(lo + 1) * k];
        let b = &mut tail[..k];
        let mut d2 = 0.0;
        for d in 0..k {
            diff[d] = a[d] - b[d];
            d2 += diff[d] * diff[d];
        }
        if !d2.is_finite() {
            return Err(ThomsonError::DivergenceDetected {
                iteration: t,
                value: f64::INFINITY,
                initial: f_init,
            });
        }
        if d2 < crate::geometry::DIST_FLOOR * crate::geometry::DIST_FLOOR {
            return Err(ThomsonError::CoincidentPoints { i: lo, j: hi, distance: d2.sqrt() });
        }
        let rep = -2.0 / (d2 * d2);
        let ca = pen_coef * (dot(a, a) - 1.0);
        let cb = pen_coef * (dot(b, b) - 1.0);
        let (mut na, mut nb) = (0.0, 0.0);
        for d in 0..k {
            ga[d] = rep * diff[d] + ca * a[d];
            gb[d] = -rep * diff[d] + cb * b[d];
            na += ga[d] * ga[d];
            nb += gb[d] * gb[d];
        }
        let sa = clip(step, na.sqrt(), opts.max_displacement);
        let sb = clip(step, nb.sqrt(), opts.max_displacement);
        for d in 0..k {
            a[d] -= sa * ga[d];
            b[d] -= sb * gb[d];
        }

        if t % opts.trace_every == 0 || t == opts.iters {
            let f = observe(&x, &mut grad, t, &mut recorder)?;
            if !f.is_finite() || f > 10.0 * f_init {
                return Err(ThomsonError::DivergenceDetected {
                    iteration: t,
                    value: f,
                    initial: f_init,
                });
            }
            f_last = f;
        }
    }

    let report = SolveReport {
        final_point: x.clone(),
        final_value: f_last,
        iterations: opts.iters,
        stop_reason: StopReason::Completed,
        wall_time_s: recorder.elapsed(),
        trace: recorder.points,
    };
    SphereSolution::from_final(cfg0.with_coords(x)?, report, Vec::new())
}
