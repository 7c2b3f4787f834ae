//! Point configurations on the unit sphere in R^k and the inverse-square
//! pair energy they are scored by.
//!
//! A [`Configuration`] stores `n` points of dimension `k` column-major: point
//! `i` occupies `coords[i * k..(i + 1) * k]`. The slice-level functions
//! (`energy_of`, `energy_and_gradient`) are what the solvers call in their
//! inner loops; the typed functions wrap them for callers that hold a
//! `Configuration`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThomsonError};

/// Pairwise distances below this are rejected as coincident points.
pub const DIST_FLOOR: f64 = 1e-12;

/// Default tolerance on `| ||x_i|| - 1 |` for a configuration to count as feasible.
pub const TOL_FEAS: f64 = 1e-8;

/// `k x n` coordinate matrix, one column per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationJson", into = "ConfigurationJson")]
pub struct Configuration {
    k: usize,
    n: usize,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationJson {
    k: usize,
    n: usize,
    coords: Vec<Vec<f64>>,
}

impl TryFrom<ConfigurationJson> for Configuration {
    type Error = ThomsonError;

    fn try_from(raw: ConfigurationJson) -> Result<Self> {
        if raw.coords.len() != raw.n {
            return Err(ThomsonError::DimensionMismatch {
                expected: raw.n,
                got: raw.coords.len(),
            });
        }
        let mut flat = Vec::with_capacity(raw.k * raw.n);
        for col in &raw.coords {
            if col.len() != raw.k {
                return Err(ThomsonError::DimensionMismatch {
                    expected: raw.k,
                    got: col.len(),
                });
            }
            flat.extend_from_slice(col);
        }
        Configuration::new(raw.k, raw.n, flat)
    }
}

impl From<Configuration> for ConfigurationJson {
    fn from(cfg: Configuration) -> Self {
        ConfigurationJson {
            k: cfg.k,
            n: cfg.n,
            coords: cfg.points().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl Configuration {
    /// Builds a configuration from column-major coordinates.
    pub fn new(k: usize, n: usize, coords: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(ThomsonError::InvalidConfiguration(format!(
                "dimension k = {k} must be at least 2"
            )));
        }
        if n < 2 {
            return Err(ThomsonError::TooFewPoints { required: 2, got: n });
        }
        if coords.len() != k * n {
            return Err(ThomsonError::DimensionMismatch {
                expected: k * n,
                got: coords.len(),
            });
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(ThomsonError::InvalidConfiguration(format!(
                "non-finite coordinate {} in point {}",
                coords[pos],
                pos / k
            )));
        }
        Ok(Self { k, n, coords })
    }

    /// Builds a configuration from a list of points, all of the same dimension.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let k = points.first().map_or(0, |p| p.as_ref().len());
        let mut flat = Vec::with_capacity(k * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != k {
                return Err(ThomsonError::DimensionMismatch {
                    expected: k,
                    got: p.len(),
                });
            }
            flat.extend_from_slice(p);
        }
        Self::new(k, points.len(), flat)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Column-major coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.k..(i + 1) * self.k]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.k)
    }

    /// Same shape, new coordinates.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        Self::new(self.k, self.n, coords)
    }

    /// True when every column norm is within `tol` of 1.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.points().all(|p| (norm(p) - 1.0).abs() <= tol)
    }
}

/// Polar and azimuthal angles of points on the ordinary sphere (k = 3).
///
/// Angles are wrapped on construction: `phi` into `[0, pi]`, `theta` into
/// `[0, 2 pi)`, keeping the Cartesian point unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularConfiguration {
    phi: Vec<f64>,
    theta: Vec<f64>,
}

impl AngularConfiguration {
    pub fn new(phi: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if phi.len() != theta.len() {
            return Err(ThomsonError::DimensionMismatch {
                expected: phi.len(),
                got: theta.len(),
            });
        }
        if phi.len() < 2 {
            return Err(ThomsonError::TooFewPoints {
                required: 2,
                got: phi.len(),
            });
        }
        if phi.iter().chain(&theta).any(|a| !a.is_finite()) {
            return Err(ThomsonError::InvalidConfiguration(
                "non-finite angle".to_string(),
            ));
        }
        let (phi, theta) = phi
            .into_iter()
            .zip(theta)
            .map(|(p, t)| wrap_angles(p, t))
            .unzip();
        Ok(Self { phi, theta })
    }

    /// Splits a packed `[phi_1..phi_n, theta_1..theta_n]` vector.
    pub fn from_packed(angles: &[f64]) -> Result<Self> {
        if !angles.len().is_multiple_of(2) {
            return Err(ThomsonError::InvalidConfiguration(
                "packed angle vector must have even length".to_string(),
            ));
        }
        let n = angles.len() / 2;
        Self::new(angles[..n].to_vec(), angles[n..].to_vec())
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `[phi_1..phi_n, theta_1..theta_n]`, the layout the spherical solver optimizes.
    pub fn packed(&self) -> Vec<f64> {
        self.phi.iter().chain(&self.theta).copied().collect()
    }
}

fn wrap_angles(phi: f64, theta: f64) -> (f64, f64) {
    let tau = 2.0 * PI;
    let mut p = phi.rem_euclid(tau);
    let mut t = theta;
    if p > PI {
        p = tau - p;
        t += PI;
    }
    t = t.rem_euclid(tau);
    // rem_euclid can round up to exactly tau
    if t >= tau {
        t = 0.0;
    }
    (p, t)
}

/// Inverse-square energy of a configuration. Always finite and positive.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyValue(f64);

impl EnergyValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<EnergyValue> for f64 {
    fn from(e: EnergyValue) -> f64 {
        e.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn check_pair(i: usize, j: usize, d2: f64) -> Result<()> {
    // also catches NaN
    if !(d2 >= DIST_FLOOR * DIST_FLOOR) {
        return Err(ThomsonError::CoincidentPoints {
            i,
            j,
            distance: d2.sqrt(),
        });
    }
    Ok(())
}

/// Energy of column-major coordinates with point dimension `k`.
///
/// Pairs are visited with `i` ascending and `j < i` ascending, so the result
/// is bitwise reproducible.
pub fn energy_of(coords: &[f64], k: usize) -> Result<f64> {
    let n = coords.len() / k;
    let mut total = 0.0;
    for i in 1..n {
        let xi = &coords[i * k..(i + 1) * k];
        for j in 0..i {
            let d2 = dist_sq(xi, &coords[j * k..(j + 1) * k]);
            check_pair(i, j, d2)?;
            total += 1.0 / d2;
        }
    }
    Ok(total)
}

/// Energy and its Cartesian gradient in one pass. `grad` is overwritten.
pub fn energy_and_gradient(coords: &[f64], k: usize, grad: &mut [f64]) -> Result<f64> {
    let n = coords.len() / k;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut total = 0.0;
    let mut diff = vec![0.0; k];
    for i in 1..n {
        for j in 0..i {
            let mut d2 = 0.0;
            for d in 0..k {
                let v = coords[i * k + d] - coords[j * k + d];
                diff[d] = v;
                d2 += v * v;
            }
            check_pair(i, j, d2)?;
            let inv = 1.0 / d2;
            total += inv;
            let scale = -2.0 * inv * inv;
            for d in 0..k {
                let t = scale * diff[d];
                grad[i * k + d] += t;
                grad[j * k + d] -= t;
            }
        }
    }
    Ok(total)
}

/// `f(X) = sum_{i} sum_{j<i} 1 / ||x_i - x_j||^2`.
pub fn energy(cfg: &Configuration) -> Result<EnergyValue> {
    energy_of(&cfg.coords, cfg.k).map(EnergyValue)
}

/// Column `i` holds `-2 sum_{l != i} (x_i - x_l) / ||x_i - x_l||^4`.
pub fn energy_gradient(cfg: &Configuration) -> Result<Configuration> {
    let mut grad = vec![0.0; cfg.coords.len()];
    energy_and_gradient(&cfg.coords, cfg.k, &mut grad)?;
    Ok(Configuration {
        k: cfg.k,
        n: cfg.n,
        coords: grad,
    })
}

#[inline]
fn bracket(sp_i: f64, cp_i: f64, sp_j: f64, cp_j: f64, dtheta: f64) -> f64 {
    sp_i * sp_j * dtheta.cos() + cp_i * cp_j - 1.0
}

/// Spherical-coordinate energy on raw (possibly unwrapped) angles.
pub fn spherical_energy_angles(phi: &[f64], theta: &[f64]) -> Result<f64> {
    let n = phi.len();
    let (sp, cp): (Vec<f64>, Vec<f64>) = phi.iter().map(|p| p.sin_cos()).unzip();
    let mut total = 0.0;
    for i in 1..n {
        for j in 0..i {
            let b = bracket(sp[i], cp[i], sp[j], cp[j], theta[i] - theta[j]);
            if !(b.abs() >= DIST_FLOOR) {
                return Err(ThomsonError::CoincidentPoints {
                    i,
                    j,
                    distance: (-2.0 * b).max(0.0).sqrt(),
                });
            }
            total -= 1.0 / (2.0 * b);
        }
    }
    Ok(total)
}

/// Energy and angle gradients on raw angles; `dphi` and `dtheta` are overwritten.
pub fn spherical_energy_and_gradient(
    phi: &[f64],
    theta: &[f64],
    dphi: &mut [f64],
    dtheta: &mut [f64],
) -> Result<f64> {
    let n = phi.len();
    let (sp, cp): (Vec<f64>, Vec<f64>) = phi.iter().map(|p| p.sin_cos()).unzip();
    dphi.iter_mut().for_each(|g| *g = 0.0);
    dtheta.iter_mut().for_each(|g| *g = 0.0);
    let mut total = 0.0;
    for i in 1..n {
        for j in 0..i {
            let (s_d, c_d) = (theta[i] - theta[j]).sin_cos();
            let b = sp[i] * sp[j] * c_d + cp[i] * cp[j] - 1.0;
            if !(b.abs() >= DIST_FLOOR) {
                return Err(ThomsonError::CoincidentPoints {
                    i,
                    j,
                    distance: (-2.0 * b).max(0.0).sqrt(),
                });
            }
            total -= 1.0 / (2.0 * b);
            let w = 1.0 / (2.0 * b * b);
            // i's partials, then j's with roles swapped (sin of -dtheta flips sign)
            dphi[i] += w * (cp[i] * sp[j] * c_d - sp[i] * cp[j]);
            dphi[j] += w * (cp[j] * sp[i] * c_d - sp[j] * cp[i]);
            let t = -w * sp[i] * sp[j] * s_d;
            dtheta[i] += t;
            dtheta[j] -= t;
        }
    }
    Ok(total)
}

/// `f(phi, theta) = -sum_i sum_{j<i} 1 / (2 [sin phi_i sin phi_j cos(theta_i - theta_j) + cos phi_i cos phi_j - 1])`.
pub fn spherical_energy(acfg: &AngularConfiguration) -> Result<EnergyValue> {
    spherical_energy_angles(&acfg.phi, &acfg.theta).map(EnergyValue)
}

/// Partial derivatives `(df/dphi, df/dtheta)`.
pub fn spherical_gradient(acfg: &AngularConfiguration) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = acfg.n();
    let mut dphi = vec![0.0; n];
    let mut dtheta = vec![0.0; n];
    spherical_energy_and_gradient(&acfg.phi, &acfg.theta, &mut dphi, &mut dtheta)?;
    Ok((dphi, dtheta))
}

/// `x = sin phi cos theta, y = sin phi sin theta, z = cos phi`.
pub fn to_cartesian(acfg: &AngularConfiguration) -> Configuration {
    angles_to_cartesian(&acfg.phi, &acfg.theta)
}

pub(crate) fn angles_to_cartesian(phi: &[f64], theta: &[f64]) -> Configuration {
    let coords = phi
        .iter()
        .zip(theta)
        .flat_map(|(p, t)| {
            let (sp, cp) = p.sin_cos();
            let (st, ct) = t.sin_cos();
            [sp * ct, sp * st, cp]
        })
        .collect();
    Configuration {
        k: 3,
        n: phi.len(),
        coords,
    }
}

/// Inverse of [`to_cartesian`]. Points on the poles get `theta = 0`.
pub fn to_spherical(cfg: &Configuration) -> Result<AngularConfiguration> {
    if cfg.k != 3 {
        return Err(ThomsonError::DimensionMismatch {
            expected: 3,
            got: cfg.k,
        });
    }
    if !cfg.is_feasible(TOL_FEAS) {
        return Err(ThomsonError::InvalidConfiguration(
            "to_spherical needs unit-norm columns".to_string(),
        ));
    }
    let mut phi = Vec::with_capacity(cfg.n);
    let mut theta = Vec::with_capacity(cfg.n);
    for p in cfg.points() {
        let (x, y, z) = (p[0], p[1], p[2]);
        let rho = x.hypot(y);
        phi.push(rho.atan2(z));
        theta.push(if rho == 0.0 { 0.0 } else { y.atan2(x) });
    }
    AngularConfiguration::new(phi, theta)
}

/// Normalizes one column in place.
pub(crate) fn normalize_in_place(p: &mut [f64], index: usize) -> Result<()> {
    let sq = dot(p, p);
    // leave unit columns alone so projection is idempotent bitwise
    if (sq - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(());
    }
    let nrm = sq.sqrt();
    if !(nrm >= DIST_FLOOR) {
        return Err(ThomsonError::ZeroNormColumn { index });
    }
    p.iter_mut().for_each(|v| *v /= nrm);
    Ok(())
}

/// Normalizes every column of column-major coordinates in place.
pub fn project_coords(coords: &mut [f64], k: usize) -> Result<()> {
    for (i, p) in coords.chunks_exact_mut(k).enumerate() {
        normalize_in_place(p, i)?;
    }
    Ok(())
}

/// Column normalization onto the unit sphere.
pub fn project_to_sphere(cfg: &Configuration) -> Result<Configuration> {
    let mut coords = cfg.coords.clone();
    project_coords(&mut coords, cfg.k)?;
    Ok(Configuration {
        k: cfg.k,
        n: cfg.n,
        coords,
    })
}

pub(crate) fn residual_of(coords: &[f64], k: usize) -> f64 {
    coords
        .chunks_exact(k)
        .map(|p| (dot(p, p) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max_i | ||x_i||^2 - 1 |`.
pub fn constraint_residual(cfg: &Configuration) -> f64 {
    residual_of(&cfg.coords, cfg.k)
}

/// `n` independent uniform points on the unit sphere in R^k.
pub fn random_configuration(n: usize, k: usize, seed: u64) -> Result<Configuration> {
    if n < 2 {
        return Err(ThomsonError::TooFewPoints { required: 2, got: n });
    }
    if k < 2 {
        return Err(ThomsonError::InvalidConfiguration(format!(
            "dimension k = {k} must be at least 2"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * k);
    let mut p = vec![0.0; k];
    for _ in 0..n {
        loop {
            p.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            let nrm = norm(&p);
            if nrm > 1e-6 {
                coords.extend(p.iter().map(|v| v / nrm));
                break;
            }
        }
    }
    Configuration::new(k, n, coords)
}

/// Smallest pairwise Euclidean distance.
pub fn min_pair_distance(cfg: &Configuration) -> f64 {
    let mut best = f64::INFINITY;
    for i in 1..cfg.n {
        for j in 0..i {
            best = best.min(dist_sq(cfg.point(i), cfg.point(j)));
        }
    }
    best.sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn antipodal() -> Configuration {
        Configuration::from_points(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).unwrap()
    }

    fn tetrahedron() -> Configuration {
        let s = 1.0 / 3f64.sqrt();
        Configuration::from_points(&[
            [s, s, s],
            [s, -s, -s],
            [-s, s, -s],
            [-s, -s, s],
        ])
        .unwrap()
    }

    #[test]
    fn antipodal_energy_and_gradient() {
        let cfg = antipodal();
        assert_eq!(energy(&cfg).unwrap().value(), 0.25);
        let g = energy_gradient(&cfg).unwrap();
        assert_eq!(g.point(0), &[0.0, 0.0, -0.25]);
        assert_eq!(g.point(1), &[0.0, 0.0, 0.25]);
    }

    #[test]
    fn tetrahedron_energy() {
        // six edges with d^2 = 8/3
        let e = energy(&tetrahedron()).unwrap().value();
        assert!((e - 6.0 * 3.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_rejected() {
        let cfg = Configuration::from_points(&[[0.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            energy(&cfg),
            Err(ThomsonError::CoincidentPoints { i: 1, j: 0, .. })
        ));
        assert!(energy_gradient(&cfg).is_err());
    }

    #[test]
    fn gradient_columns_sum_to_zero() {
        let cfg = random_configuration(9, 4, 3).unwrap();
        let g = energy_gradient(&cfg).unwrap();
        for d in 0..4 {
            let s: f64 = g.points().map(|p| p[d]).sum();
            assert!(s.abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn constructor_validation() {
        assert!(Configuration::new(1, 3, vec![0.0; 3]).is_err());
        assert!(Configuration::new(3, 1, vec![0.0; 3]).is_err());
        assert!(Configuration::new(3, 2, vec![0.0; 5]).is_err());
        assert!(Configuration::new(2, 2, vec![0.0, f64::NAN, 1.0, 0.0]).is_err());
    }

    #[test]
    fn spherical_energy_examples() {
        let eq = AngularConfiguration::new(vec![PI / 2.0; 2], vec![0.0, PI]).unwrap();
        assert!((spherical_energy(&eq).unwrap().value() - 0.25).abs() < 1e-15);
        let poles = AngularConfiguration::new(vec![0.0, PI], vec![1.3, -0.4]).unwrap();
        assert!((spherical_energy(&poles).unwrap().value() - 0.25).abs() < 1e-15);
        let (dphi, dtheta) = spherical_gradient(&eq).unwrap();
        for v in dphi.iter().chain(&dtheta) {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn spherical_theta_partials_antisymmetric() {
        let a = AngularConfiguration::new(vec![PI / 2.0; 2], vec![0.0, PI / 2.0]).unwrap();
        let (_, dtheta) = spherical_gradient(&a).unwrap();
        assert!(dtheta[0] != 0.0);
        assert_eq!(dtheta[0], -dtheta[1]);
    }

    #[test]
    fn cartesian_examples() {
        let a = AngularConfiguration::new(vec![0.0, PI / 2.0, PI / 2.0], vec![2.0, 0.0, PI / 2.0])
            .unwrap();
        let c = to_cartesian(&a);
        assert_eq!(c.point(0), &[0.0, 0.0, 1.0]);
        assert_eq!(c.point(1), &[1.0, 0.0, (PI / 2.0).cos()]);
        assert!((c.point(2)[0]).abs() < 1e-16 && c.point(2)[1] == 1.0);
    }

    #[test]
    fn to_spherical_examples() {
        let cfg = Configuration::from_points(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
        let a = to_spherical(&cfg).unwrap();
        assert_eq!((a.phi()[0], a.theta()[0]), (0.0, 0.0));
        assert_eq!((a.phi()[1], a.theta()[1]), (PI / 2.0, 0.0));
        let flat = Configuration::from_points(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            to_spherical(&flat),
            Err(ThomsonError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn angle_wrapping_preserves_point() {
        let raw_phi = [-0.3, 4.0, 7.5];
        let raw_theta = [0.2, -1.0, 13.0];
        let a = AngularConfiguration::new(raw_phi.to_vec(), raw_theta.to_vec()).unwrap();
        let wrapped = to_cartesian(&a);
        let unwrapped = angles_to_cartesian(&raw_phi, &raw_theta);
        for (x, y) in wrapped.coords().iter().zip(unwrapped.coords()) {
            assert!((x - y).abs() < 1e-14);
        }
        for (&p, &t) in a.phi().iter().zip(a.theta()) {
            assert!((0.0..=PI).contains(&p));
            assert!((0.0..2.0 * PI).contains(&t));
        }
    }

    #[test]
    fn projection_examples() {
        let cfg = Configuration::from_points(&[[0.0, 0.0, 2.0], [0.0, 0.0, -1.0]]).unwrap();
        let p = project_to_sphere(&cfg).unwrap();
        assert_eq!(p.point(0), &[0.0, 0.0, 1.0]);
        assert_eq!(p.point(1), cfg.point(1));
        let zero = Configuration::from_points(&[[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(
            project_to_sphere(&zero),
            Err(ThomsonError::ZeroNormColumn { index: 0 })
        ));
    }

    #[test]
    fn residual_examples() {
        let s = 2f64.sqrt();
        let unit = antipodal();
        assert_eq!(constraint_residual(&unit), 0.0);
        let big = Configuration::from_points(&[[0.0, 0.0, s], [0.0, 0.0, -1.0]]).unwrap();
        assert!((constraint_residual(&big) - 1.0).abs() < 1e-15);
        let small = Configuration::from_points(&[[0.0, 0.0, 0.5], [0.0, 0.0, -1.0]]).unwrap();
        assert_eq!(constraint_residual(&small), 0.75);
    }

    #[test]
    fn random_configuration_is_deterministic_and_unit() {
        let a = random_configuration(20, 3, 42).unwrap();
        let b = random_configuration(20, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_configuration(20, 3, 43).unwrap());
        for p in a.points() {
            assert!((norm(p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn random_configuration_is_centered() {
        let cfg = random_configuration(1000, 3, 7).unwrap();
        for d in 0..3 {
            let mean: f64 = cfg.points().map(|p| p[d]).sum::<f64>() / 1000.0;
            assert!(mean.abs() < 0.05, "coordinate {d} mean {mean}");
        }
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(antipodal()).unwrap();
        assert_eq!(v["k"], 3);
        assert_eq!(v["n"], 2);
        assert_eq!(v["coords"][1][2], -1.0);
        let bad = r#"{"k":3,"n":2,"coords":[[0,0,1],[0,1]]}"#;
        assert!(serde_json::from_str::<Configuration>(bad).is_err());
    }
}
