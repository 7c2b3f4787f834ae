//! Coulomb force relaxation: each point in turn is pushed along the net
//! inverse-square force from the others and pulled back onto the sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ThomsonError};
use crate::geometry::{dot, energy_and_gradient, normalize_in_place, residual_of, Configuration, DIST_FLOOR, TOL_FEAS};
use crate::solvers::{tangential_gradient, SolveReport, StopReason, TraceRecorder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForceOptions {
    pub eta: f64,
    pub passes: usize,
    pub eta_decay: f64,
    pub stop_tol: f64,
}

impl Default for ForceOptions {
    fn default() -> Self {
        Self {
            eta: 0.05,
            passes: 2000,
            eta_decay: 0.98,
            stop_tol: 1e-10,
        }
    }
}

impl ForceOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(ThomsonError::InvalidOptions("eta must be positive".into()));
        }
        if self.passes == 0 {
            return Err(ThomsonError::InvalidOptions("passes must be >= 1".into()));
        }
        if !(self.eta_decay > 0.0 && self.eta_decay <= 1.0) {
            return Err(ThomsonError::InvalidOptions("eta_decay must lie in (0, 1]".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(ThomsonError::InvalidOptions("stop_tol must be >= 0".into()));
        }
        Ok(())
    }
}

fn force_into(coords: &[f64], k: usize, i: usize, out: &mut [f64]) -> Result<()> {
    out.iter_mut().for_each(|v| *v = 0.0);
    let xi = &coords[i * k..(i + 1) * k];
    for (j, xj) in coords.chunks_exact(k).enumerate() {
        if j == i {
            continue;
        }
        let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
        let d = d2.sqrt();
        if !(d >= DIST_FLOOR) {
            return Err(ThomsonError::CoincidentPoints { i: i.max(j), j: i.min(j), distance: d });
        }
        let s = 1.0 / (d2 * d);
        for ((o, a), b) in out.iter_mut().zip(xi).zip(xj) {
            *o += s * (a - b);
        }
    }
    Ok(())
}

/// Net force on point `i`: `sum_j (x_i - x_j) / ||x_i - x_j||^3`.
pub fn net_force(cfg: &Configuration, i: usize) -> Result<Vec<f64>> {
    if i >= cfg.n() {
        return Err(ThomsonError::IndexError { index: i, n: cfg.n() });
    }
    let mut f = vec![0.0; cfg.k()];
    force_into(cfg.coords(), cfg.k(), i, &mut f)?;
    Ok(f)
}

/// One in-place pass over the points in index order; returns the largest
/// distance any point moved.
fn sweep_in_place(coords: &mut [f64], k: usize, eta: f64) -> Result<f64> {
    let n = coords.len() / k;
    let mut f = vec![0.0; k];
    let mut moved: f64 = 0.0;
    for i in 0..n {
        force_into(coords, k, i, &mut f)?;
        let x = &mut coords[i * k..(i + 1) * k];
        let old: Vec<f64> = x.to_vec();
        x.iter_mut().zip(&f).for_each(|(xi, fi)| *xi += eta * fi);
        normalize_in_place(x, i)?;
        let step: f64 = x.iter().zip(&old).map(|(a, b)| (a - b) * (a - b)).sum();
        moved = moved.max(step.sqrt());
    }
    Ok(moved)
}

/// Single Gauss-Seidel pass with step `opts.eta`.
pub fn sweep(cfg: &Configuration, opts: &ForceOptions) -> Result<Configuration> {
    opts.validate()?;
    let mut x = cfg.coords().to_vec();
    sweep_in_place(&mut x, cfg.k(), opts.eta)?;
    cfg.with_coords(x)
}

/// Repeated sweeps. The step shrinks by `eta_decay` after any pass that
/// raised the energy. Trace rows are per pass: energy, tangential gradient
/// norm, residual.
pub fn force_relax(cfg0: &Configuration, opts: &ForceOptions) -> Result<SolveReport> {
    opts.validate()?;
    if !cfg0.is_feasible(TOL_FEAS) {
        return Err(ThomsonError::InvalidConfiguration("force relaxation needs a feasible start".into()));
    }
    let k = cfg0.k();
    let mut x = cfg0.coords().to_vec();
    let mut g = vec![0.0; x.len()];
    let mut recorder = TraceRecorder::new();
    let observe = |x: &[f64], g: &mut [f64], pass: usize, rec: &mut TraceRecorder| -> Result<f64> {
        let f = energy_and_gradient(x, k, g)?;
        let gt = tangential_gradient(x, g, k);
        rec.record(pass, f, dot(&gt, &gt).sqrt(), residual_of(x, k));
        Ok(f)
    };
    let mut f = observe(&x, &mut g, 0, &mut recorder)?;
    let mut eta = opts.eta;
    let mut stop = StopReason::MaxIters;
    let mut passes = 0;
    for pass in 1..=opts.passes {
        let moved = sweep_in_place(&mut x, k, eta)?;
        let f_prev = f;
        f = observe(&x, &mut g, pass, &mut recorder)?;
        passes = pass;
        if moved < opts.stop_tol {
            stop = StopReason::Displacement;
            break;
        }
        if f > f_prev {
            eta *= opts.eta_decay;
        }
    }
    Ok(SolveReport {
        final_point: x,
        final_value: f,
        iterations: passes,
        stop_reason: stop,
        wall_time_s: recorder.elapsed(),
        trace: recorder.points,
    })
}
