//! Forward finite-difference gradient verification.

use std::fmt;

use serde::Serialize;

use crate::error::{Result, ThomsonError};

/// Default forward-difference step.
pub const DEFAULT_STEP: f64 = 1e-6;

/// A check passes when `diff_norm / max(1, ||G||) < PASS_THRESHOLD`.
pub const PASS_THRESHOLD: f64 = 1e-4;

/// Analytic vs. finite-difference gradient comparison.
#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    /// The supplied gradient `G`.
    pub analytic: Vec<f64>,
    /// The forward-difference gradient `GFD`.
    pub numeric: Vec<f64>,
    /// Entry of `G - GFD` with the largest magnitude, sign kept.
    pub max_diff: f64,
    pub max_diff_index: usize,
    /// `||G - GFD||_2`.
    pub diff_norm: f64,
    pub step: f64,
    pub passed: bool,
}

impl GradCheckReport {
    /// `diff_norm / max(1, ||G||)`, the quantity the pass flag thresholds.
    pub fn relative_diff(&self) -> f64 {
        let g_norm = self.analytic.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.diff_norm / g_norm.max(1.0)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>20}: [{}x1 double]", "G", self.analytic.len())?;
        writeln!(f, "{:>20}: [{}x1 double]", "GFD", self.numeric.len())?;
        writeln!(f, "{:>20}: {:.4e}", "MaxDiff", self.max_diff)?;
        writeln!(f, "{:>20}: {}", "MaxDiffInd", self.max_diff_index + 1)?;
        writeln!(f, "{:>20}: {:.4e}", "NormGradientDiffs", self.diff_norm)?;
        writeln!(f, "{:>20}: {:.4e}", "RelativeDiff", self.relative_diff())?;
        writeln!(f, "{:>20}: {:e}", "Step", self.step)?;
        writeln!(f, "{:>20}: {}", "Passed", self.passed)?;
        writeln!(f)?;
        writeln!(f, "{:>14} {:>14}", "G", "GFD")?;
        for (g, n) in self.analytic.iter().zip(&self.numeric) {
            writeln!(f, "{g:>14.4} {n:>14.4}")?;
        }
        Ok(())
    }
}

fn finite(value: f64, evaluation: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ThomsonError::NonFiniteObjective { evaluation, value })
    }
}

/// One-sided differences `(f(x + h e_j) - f(x)) / h`.
pub fn fd_gradient<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(ThomsonError::InvalidOptions(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let f0 = finite(f(x)?, 0)?;
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let fj = finite(f(&probe)?, j + 1)?;
        probe[j] = x[j];
        out.push((fj - f0) / h);
    }
    Ok(out)
}

/// Compares `g(x)` to forward differences of `f` at `x`.
pub fn check_gradient<F, G>(f: F, g: G, x: &[f64], h: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
    G: FnOnce(&[f64]) -> Result<Vec<f64>>,
{
    let numeric = fd_gradient(f, x, h)?;
    let analytic = g(x)?;
    if analytic.len() != numeric.len() {
        return Err(ThomsonError::DimensionMismatch {
            expected: numeric.len(),
            got: analytic.len(),
        });
    }
    let mut max_diff = 0.0;
    let mut max_diff_index = 0;
    let mut sq = 0.0;
    for (idx, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let d = a - n;
        sq += d * d;
        if d.abs() > f64::abs(max_diff) {
            max_diff = d;
            max_diff_index = idx;
        }
    }
    let mut report = GradCheckReport {
        analytic,
        numeric,
        max_diff,
        max_diff_index,
        diff_norm: sq.sqrt(),
        step: h,
        passed: false,
    };
    report.passed = report.relative_diff() < PASS_THRESHOLD;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_norm(x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn quadratic_forward_difference() {
        let g = fd_gradient(sq_norm, &[1.0, 2.0], 1e-6).unwrap();
        // exact forward difference of x^2 is 2x + h
        assert!((g[0] - 2.000001).abs() < 1e-8);
        assert!((g[1] - 4.000001).abs() < 1e-8);
    }

    #[test]
    fn constant_function_has_zero_fd() {
        let g = fd_gradient(|_| Ok(3.5), &[1.0, -2.0, 0.0], 1e-6).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn exact_gradient_passes() {
        let x = [0.3, -1.2, 2.0];
        let r = check_gradient(sq_norm, |x| Ok(x.iter().map(|v| 2.0 * v).collect()), &x, 1e-6)
            .unwrap();
        assert!(r.passed);
        assert!((r.max_diff.abs() - 1e-6).abs() < 1e-8);
        assert_eq!(r.max_diff, r.analytic[r.max_diff_index] - r.numeric[r.max_diff_index]);
        assert!(r.max_diff.abs() <= r.diff_norm);
    }

    #[test]
    fn doubled_gradient_fails() {
        let x = [0.3, -1.2, 2.0];
        let r = check_gradient(sq_norm, |x| Ok(x.iter().map(|v| 4.0 * v).collect()), &x, 1e-6)
            .unwrap();
        assert!(!r.passed);
        let g_norm = 2.0 * x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((r.diff_norm - g_norm).abs() < 1e-4);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let err = fd_gradient(
            |x: &[f64]| Ok(if x[0] > 1.0 { f64::NAN } else { 0.0 }),
            &[1.0],
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, ThomsonError::NonFiniteObjective { evaluation: 1, .. }));
    }

    #[test]
    fn report_is_deterministic() {
        let x = [0.1, 0.2];
        let grad = |x: &[f64]| Ok(x.iter().map(|v| 2.0 * v).collect());
        let a = check_gradient(sq_norm, grad, &x, 1e-6).unwrap();
        let b = check_gradient(sq_norm, grad, &x, 1e-6).unwrap();
        assert_eq!(a.numeric, b.numeric);
        assert_eq!(a.diff_norm, b.diff_norm);
    }
}
