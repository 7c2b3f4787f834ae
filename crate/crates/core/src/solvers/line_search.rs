//! Strong-Wolfe line search (bracketing + zoom with safeguarded cubic
//! interpolation). Trial points where the objective errors out or is
//! non-finite are treated as overshoots.

use crate::error::Result;

pub(crate) const C1: f64 = 1e-4;
pub(crate) const C2: f64 = 0.9;
pub(crate) const MAX_TRIALS: usize = 40;

pub(crate) struct Accepted {
    pub alpha: f64,
    pub f: f64,
}

pub(crate) enum Outcome {
    /// `g_out` holds the gradient at `x + alpha d`; `x_out` must be rebuilt
    /// by the caller since a fallback point may not be the last one probed.
    Accepted(Accepted),
    Failed {
        /// Smallest step tried; used to tell a genuine failure from rounding stagnation.
        min_alpha: f64,
    },
}

struct Probe {
    alpha: f64,
    f: f64,
    dphi: f64,
}

/// Searches along `d` from `x` (value `f0`, directional derivative `dphi0 < 0`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn strong_wolfe<F>(
    obj: &mut F,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    d: &[f64],
    alpha_init: f64,
    x_out: &mut [f64],
    g_out: &mut [f64],
) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let mut trials = 0usize;
    let mut min_alpha = f64::INFINITY;
    // best Armijo point seen, kept as a fallback
    let mut best: Option<(f64, f64, Vec<f64>)> = None;

    let mut eval = |alpha: f64, x_out: &mut [f64], g_out: &mut [f64], trials: &mut usize| -> Probe {
        *trials += 1;
        for ((xo, xi), di) in x_out.iter_mut().zip(x).zip(d) {
            *xo = xi + alpha * di;
        }
        match obj(x_out, g_out) {
            Ok(f) if f.is_finite() && g_out.iter().all(|v| v.is_finite()) => {
                let dphi = g_out.iter().zip(d).map(|(g, d)| g * d).sum();
                Probe { alpha, f, dphi }
            }
            _ => Probe {
                alpha,
                f: f64::INFINITY,
                dphi: f64::NAN,
            },
        }
    };

    let armijo = |p: &Probe| p.f <= f0 + C1 * p.alpha * dphi0;
    let curvature = |p: &Probe| p.dphi.abs() <= -C2 * dphi0;

    let mut prev = Probe {
        alpha: 0.0,
        f: f0,
        dphi: dphi0,
    };
    let mut alpha = alpha_init;
    let (mut lo, mut hi);
    loop {
        if trials >= MAX_TRIALS {
            return finish(best, min_alpha, g_out);
        }
        min_alpha = min_alpha.min(alpha);
        let p = eval(alpha, x_out, g_out, &mut trials);
        if !p.f.is_finite() {
            // overshoot into a singular region: pull back
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if armijo(&p) && best.as_ref().is_none_or(|b| p.f < b.1) {
            best = Some((p.alpha, p.f, g_out.to_vec()));
        }
        if !armijo(&p) || (prev.alpha > 0.0 && p.f >= prev.f) {
            lo = prev;
            hi = p;
            break;
        }
        if curvature(&p) {
            return Outcome::Accepted(Accepted { alpha: p.alpha, f: p.f });
        }
        if p.dphi >= 0.0 {
            lo = p;
            hi = prev;
            break;
        }
        prev = p;
        alpha *= 2.0;
    }

    // zoom: lo satisfies Armijo and has the lowest value so far
    loop {
        if trials >= MAX_TRIALS {
            break;
        }
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if width <= f64::EPSILON * b.max(f64::MIN_POSITIVE) {
            break;
        }
        let mut trial = if hi.f.is_finite() && hi.dphi.is_finite() {
            cubic_min(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi)
        } else {
            f64::NAN
        };
        let margin = 0.1 * width;
        if !trial.is_finite() || trial < a + margin || trial > b - margin {
            trial = 0.5 * (a + b);
        }
        min_alpha = min_alpha.min(trial);
        let p = eval(trial, x_out, g_out, &mut trials);
        if p.f.is_finite() && armijo(&p) && best.as_ref().is_none_or(|bst| p.f < bst.1) {
            best = Some((p.alpha, p.f, g_out.to_vec()));
        }
        if !p.f.is_finite() || !armijo(&p) || p.f >= lo.f {
            hi = p;
        } else {
            if curvature(&p) {
                return Outcome::Accepted(Accepted { alpha: p.alpha, f: p.f });
            }
            if p.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    finish(best, min_alpha, g_out)
}

fn finish(best: Option<(f64, f64, Vec<f64>)>, min_alpha: f64, g_out: &mut [f64]) -> Outcome {
    match best {
        Some((alpha, f, g)) => {
            g_out.copy_from_slice(&g);
            Outcome::Accepted(Accepted { alpha, f })
        }
        None => Outcome::Failed { min_alpha },
    }
}

/// Minimizer of the cubic interpolating `(a, fa, da)` and `(b, fb, db)`.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return f64::NAN;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
}
