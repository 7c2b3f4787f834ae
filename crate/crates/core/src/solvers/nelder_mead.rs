//! Downhill simplex with the standard coefficients (reflection 1,
//! expansion 2, contraction 0.5, shrink 0.5).

use super::report::{SolveReport, SolverOptions, StopReason, TraceRecorder};
use crate::error::{Result, ThomsonError};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Stop once every vertex is within this distance of the best one.
pub const SIMPLEX_TOL: f64 = 1e-8;

/// `x0` plus one vertex per coordinate, perturbed by 5% (0.00025 for zeros).
pub(crate) fn initial_simplex(x0: &[f64]) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for j in 0..x0.len() {
        let mut v = x0.to_vec();
        v[j] = if x0[j] != 0.0 { 1.05 * x0[j] } else { 0.00025 };
        simplex.push(v);
    }
    simplex
}

struct Evaluator<F> {
    f: F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Evaluator<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x)?;
        self.count += 1;
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(ThomsonError::NonFiniteObjective {
                evaluation: self.count,
                value: v,
            });
        }
        Ok(v)
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Derivative-free minimization of `f` from `x0`.
///
/// `+inf` values (e.g. a trial vertex that collapses two points) are
/// accepted and simply rank worst; NaN is an error.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &SolverOptions) -> Result<SolveReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    opts.validate()?;
    let mut ev = Evaluator { f, count: 0 };
    let f0 = ev.eval(x0)?;
    if !f0.is_finite() {
        return Err(ThomsonError::NonFiniteObjective {
            evaluation: 1,
            value: f0,
        });
    }
    let mut recorder = TraceRecorder::new();
    let simplex = initial_simplex(x0);
    let mut values = vec![f0];
    for v in &simplex[1..] {
        values.push(ev.eval(v)?);
    }
    let mut state = Simplex { vertices: simplex, values };
    state.sort();
    recorder.record(0, state.values[0], f64::NAN, f64::NAN);

    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;
    for iter in 1..=opts.max_iters {
        if diameter(&state.vertices) < SIMPLEX_TOL {
            stop = StopReason::SimplexSize;
            break;
        }
        state.step(&mut ev)?;
        iterations = iter;
        recorder.record(iter, state.values[0], f64::NAN, f64::NAN);
    }
    if stop == StopReason::MaxIters && diameter(&state.vertices) < SIMPLEX_TOL {
        stop = StopReason::SimplexSize;
    }

    Ok(SolveReport {
        final_point: state.vertices.swap_remove(0),
        final_value: state.values[0],
        iterations,
        stop_reason: stop,
        wall_time_s: recorder.elapsed(),
        trace: recorder.points,
    })
}

pub(crate) struct Simplex {
    pub(crate) vertices: Vec<Vec<f64>>,
    pub(crate) values: Vec<f64>,
}

impl Simplex {
    /// Stable sort by value, best first.
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.vertices = idx.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn step<F: FnMut(&[f64]) -> Result<f64>>(&mut self, ev: &mut Evaluator<F>) -> Result<()> {
        let m = self.vertices.len() - 1;
        let dim = self.vertices[0].len();
        let mut centroid = vec![0.0; dim];
        for v in &self.vertices[..m] {
            centroid.iter_mut().zip(v).for_each(|(c, x)| *c += x);
        }
        centroid.iter_mut().for_each(|c| *c /= m as f64);
        let worst = self.vertices[m].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let (f_best, f_second, f_worst) = (self.values[0], self.values[m - 1], self.values[m]);
        let xr = along(REFLECT);
        let fr = ev.eval(&xr)?;
        if fr < f_best {
            let xe = along(REFLECT * EXPAND);
            let fe = ev.eval(&xe)?;
            if fe < fr {
                self.replace_worst(xe, fe);
            } else {
                self.replace_worst(xr, fr);
            }
        } else if fr < f_second {
            self.replace_worst(xr, fr);
        } else {
            let (xc, fc, ok) = if fr < f_worst {
                let xc = along(REFLECT * CONTRACT);
                let fc = ev.eval(&xc)?;
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = along(-CONTRACT);
                let fc = ev.eval(&xc)?;
                let ok = fc < f_worst;
                (xc, fc, ok)
            };
            if ok {
                self.replace_worst(xc, fc);
            } else {
                let best = self.vertices[0].clone();
                for i in 1..=m {
                    for (x, b) in self.vertices[i].iter_mut().zip(&best) {
                        *x = b + SHRINK * (*x - b);
                    }
                    self.values[i] = ev.eval(&self.vertices[i])?;
                }
                self.sort();
            }
        }
        Ok(())
    }

    fn replace_worst(&mut self, x: Vec<f64>, fx: f64) {
        let m = self.vertices.len() - 1;
        self.vertices.pop();
        self.values.pop();
        // insert after any equal values to keep older vertices ahead
        let pos = self.values.partition_point(|v| *v <= fx);
        self.vertices.insert(pos, x);
        self.values.insert(pos, fx);
        debug_assert_eq!(self.vertices.len(), m + 1);
    }
}
