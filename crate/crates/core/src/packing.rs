//! Max-min distance packing of points on the 2-sphere.
//!
//! Alternates two moves until the per-point nearest distances agree:
//! centering every point among its three nearest neighbours, and pulling the
//! neighbours of the most isolated point towards it. Random tangential
//! perturbations of the best arrangement then look for improvements.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThomsonError};
use crate::geometry::{distance, dot, normalize_in_place, random_configuration, Configuration, DIST_FLOOR};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingState {
    pub cfg: Configuration,
    pub d_min: f64,
    pub per_point_dmin: Vec<f64>,
    /// Best `d_min` after the initial relaxation and after every restart.
    pub history: Vec<f64>,
}

impl PackingState {
    pub fn new(cfg: Configuration) -> Result<Self> {
        if cfg.k() != 3 {
            return Err(ThomsonError::DimensionMismatch { expected: 3, got: cfg.k() });
        }
        let per_point_dmin = per_point_dmin(cfg.coords());
        let d_min = per_point_dmin.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            cfg,
            d_min,
            per_point_dmin,
            history: Vec::new(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PackOptions {
    pub restarts: usize,
    pub perturb_scale: f64,
    pub seed: u64,
    /// Fraction of the arc a neighbour travels in one equalization move.
    pub pull: f64,
    pub max_sweeps: usize,
    pub move_tol: f64,
    /// Relative spread below which the nearest distances count as equal.
    pub equal_tol: f64,
    /// Cap on centering/equalization rounds per restart.
    pub max_rounds: usize,
}

impl Default for PackOptions {
    fn default() -> Self {
        Self {
            restarts: 200,
            perturb_scale: 0.01,
            seed: 0,
            pull: 0.1,
            max_sweeps: 500,
            move_tol: 1e-9,
            equal_tol: 1e-6,
            max_rounds: 200,
        }
    }
}

impl PackOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.pull > 0.0 && self.pull < 1.0) {
            return Err(ThomsonError::InvalidOptions("pull must lie in (0, 1)".into()));
        }
        if !(self.perturb_scale >= 0.0 && self.perturb_scale.is_finite()) {
            return Err(ThomsonError::InvalidOptions("perturb_scale must be finite and >= 0".into()));
        }
        if self.max_sweeps == 0 || self.max_rounds == 0 {
            return Err(ThomsonError::InvalidOptions("sweep and round limits must be >= 1".into()));
        }
        Ok(())
    }
}

fn per_point_dmin(coords: &[f64]) -> Vec<f64> {
    let n = coords.len() / 3;
    let mut out = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in 0..i {
            let d = distance(&coords[i * 3..i * 3 + 3], &coords[j * 3..j * 3 + 3]);
            out[i] = out[i].min(d);
            out[j] = out[j].min(d);
        }
    }
    out
}

fn nearest3(coords: &[f64], i: usize) -> [usize; 3] {
    let n = coords.len() / 3;
    let xi = &coords[i * 3..i * 3 + 3];
    let mut ds: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| (distance(xi, &coords[j * 3..j * 3 + 3]), j))
        .collect();
    ds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    [ds[0].1, ds[1].1, ds[2].1]
}

/// Indices of the three points closest to `i`, ties going to the lower index.
pub fn three_nearest(cfg: &Configuration, i: usize) -> Result<(usize, usize, usize)> {
    if cfg.n() < 4 {
        return Err(ThomsonError::TooFewPoints { required: 4, got: cfg.n() });
    }
    if i >= cfg.n() {
        return Err(ThomsonError::IndexError { index: i, n: cfg.n() });
    }
    if cfg.k() != 3 {
        return Err(ThomsonError::DimensionMismatch { expected: 3, got: cfg.k() });
    }
    let [a, b, c] = nearest3(cfg.coords(), i);
    Ok((a, b, c))
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Point of the sphere equidistant from `a`, `b`, `c`, on the side of `x`.
fn spherical_center(a: &[f64], b: &[f64], c: &[f64], x: &[f64], index: usize) -> Result<[f64; 3]> {
    let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let ac: Vec<f64> = c.iter().zip(a).map(|(p, q)| p - q).collect();
    let mut nrm = cross(&ab, &ac);
    let side = if dot(&nrm, x) != 0.0 { dot(&nrm, x) } else { dot(&nrm, a) };
    if side < 0.0 {
        nrm.iter_mut().for_each(|v| *v = -*v);
    }
    normalize_in_place(&mut nrm, index)?;
    Ok(nrm)
}

/// With `strict` unset, a point whose neighbours admit no unique centre
/// (two of them coincide) stays where it is.
fn center_sweep(coords: &mut [f64], strict: bool) -> Result<f64> {
    let n = coords.len() / 3;
    let mut moved: f64 = 0.0;
    for i in 0..n {
        let [a, b, c] = nearest3(coords, i);
        let target = match spherical_center(
            &coords[a * 3..a * 3 + 3],
            &coords[b * 3..b * 3 + 3],
            &coords[c * 3..c * 3 + 3],
            &coords[i * 3..i * 3 + 3],
            i,
        ) {
            Ok(t) => t,
            Err(_) if !strict => continue,
            Err(e) => return Err(e),
        };
        let x = &mut coords[i * 3..i * 3 + 3];
        moved = moved.max(distance(x, &target));
        x.copy_from_slice(&target);
    }
    Ok(moved)
}

/// One in-place pass moving every point to the centre of its three nearest
/// neighbours: the spherical point equidistant from them, taken on the same
/// side as the point being moved.
pub fn center_step(cfg: &Configuration) -> Result<Configuration> {
    if cfg.n() < 4 {
        return Err(ThomsonError::TooFewPoints { required: 4, got: cfg.n() });
    }
    if cfg.k() != 3 {
        return Err(ThomsonError::DimensionMismatch { expected: 3, got: cfg.k() });
    }
    let mut x = cfg.coords().to_vec();
    center_sweep(&mut x, true)?;
    cfg.with_coords(x)
}

fn slerp_towards(p: &mut [f64], target: &[f64], t: f64, index: usize) -> Result<()> {
    let c = dot(p, target).clamp(-1.0, 1.0);
    let omega = c.acos();
    if omega < DIST_FLOOR {
        return Ok(());
    }
    let s = omega.sin();
    let (wp, wt) = if s < 1e-12 {
        (1.0 - t, t)
    } else {
        (((1.0 - t) * omega).sin() / s, (t * omega).sin() / s)
    };
    for (a, b) in p.iter_mut().zip(target) {
        *a = wp * *a + wt * b;
    }
    normalize_in_place(p, index)
}

fn all_equal(d: &[f64], tol: f64) -> bool {
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo <= tol * hi
}

fn equalize_in_place(coords: &mut [f64], d: &[f64], pull: f64, tol: f64) -> Result<bool> {
    if all_equal(d, tol) {
        return Ok(false);
    }
    let mut best = 0;
    for (i, v) in d.iter().enumerate() {
        if *v > d[best] {
            best = i;
        }
    }
    let target: Vec<f64> = coords[best * 3..best * 3 + 3].to_vec();
    for j in nearest3(coords, best) {
        slerp_towards(&mut coords[j * 3..j * 3 + 3], &target, pull, j)?;
    }
    Ok(true)
}

/// Moves the three nearest neighbours of the point with the largest nearest
/// distance a fraction `pull` along the great circle towards it. Leaves the
/// configuration alone when all nearest distances already agree.
pub fn equalize_step(state: &PackingState, pull: f64) -> Result<Configuration> {
    if state.cfg.n() < 4 {
        return Err(ThomsonError::TooFewPoints { required: 4, got: state.cfg.n() });
    }
    if !(pull > 0.0 && pull < 1.0) {
        return Err(ThomsonError::InvalidOptions("pull must lie in (0, 1)".into()));
    }
    let mut x = state.cfg.coords().to_vec();
    equalize_in_place(&mut x, &state.per_point_dmin, pull, PackOptions::default().equal_tol)?;
    state.cfg.with_coords(x)
}

fn relax(coords: &mut [f64], opts: &PackOptions) -> Result<()> {
    for _ in 0..opts.max_rounds {
        for _ in 0..opts.max_sweeps {
            if center_sweep(coords, false)? < opts.move_tol {
                break;
            }
        }
        let d = per_point_dmin(coords);
        if !equalize_in_place(coords, &d, opts.pull, opts.equal_tol)? {
            break;
        }
    }
    Ok(())
}

fn perturb(coords: &mut [f64], scale: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    for (i, x) in coords.chunks_exact_mut(3).enumerate() {
        let mut g = [0.0; 3];
        g.iter_mut().for_each(|v| *v = scale * Distribution::<f64>::sample(&StandardNormal, rng));
        let radial = dot(&g, x);
        for (a, b) in x.iter_mut().zip(g) {
            *a += b - radial * *a;
        }
        normalize_in_place(x, i)?;
    }
    Ok(())
}

fn small_n(n: usize) -> Result<Configuration> {
    let s = 3f64.sqrt() / 2.0;
    match n {
        2 => Configuration::from_points(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]),
        3 => Configuration::from_points(&[[1.0, 0.0, 0.0], [-0.5, s, 0.0], [-0.5, -s, 0.0]]),
        _ => Err(ThomsonError::TooFewPoints { required: 2, got: n }),
    }
}

/// Best packing found from a seeded random start plus `restarts` perturbed
/// attempts. Two and three points are answered in closed form.
pub fn pack(n: usize, opts: &PackOptions) -> Result<PackingState> {
    opts.validate()?;
    if n < 4 {
        let mut st = PackingState::new(small_n(n)?)?;
        st.history.push(st.d_min);
        return Ok(st);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start = random_configuration(n, 3, opts.seed)?;
    let mut coords = start.coords().to_vec();
    relax(&mut coords, opts)?;
    let mut best = PackingState::new(start.with_coords(coords)?)?;
    best.history.push(best.d_min);
    for _ in 0..opts.restarts {
        let mut trial = best.cfg.coords().to_vec();
        perturb(&mut trial, opts.perturb_scale, &mut rng)?;
        relax(&mut trial, opts)?;
        let cand = per_point_dmin(&trial);
        let d = cand.iter().copied().fold(f64::INFINITY, f64::min);
        if d > best.d_min {
            best.cfg = best.cfg.with_coords(trial)?;
            best.d_min = d;
            best.per_point_dmin = cand;
        }
        best.history.push(best.d_min);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{constraint_residual, min_pair_distance};

    fn octahedron() -> Configuration {
        Configuration::from_points(&[
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, -1.0],
        ])
        .unwrap()
    }

    fn tetrahedron() -> Configuration {
        let s = 1.0 / 3f64.sqrt();
        Configuration::from_points(&[[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]).unwrap()
    }

    fn close(a: &Configuration, b: &Configuration, tol: f64) -> bool {
        a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn nearest_with_ties() {
        assert_eq!(three_nearest(&octahedron(), 0).unwrap(), (1, 2, 3));
        assert_eq!(three_nearest(&tetrahedron(), 2).unwrap(), (0, 1, 3));
        let tri = Configuration::from_points(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(three_nearest(&tri, 0), Err(ThomsonError::TooFewPoints { .. })));
    }

    #[test]
    fn nearest_matches_brute_force() {
        let cfg = random_configuration(10, 3, 6).unwrap();
        for i in 0..10 {
            let mut all: Vec<(f64, usize)> = (0..10)
                .filter(|&j| j != i)
                .map(|j| (distance(cfg.point(i), cfg.point(j)), j))
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (a, b, c) = three_nearest(&cfg, i).unwrap();
            assert_eq!([a, b, c], [all[0].1, all[1].1, all[2].1]);
        }
    }

    #[test]
    fn regular_solids_are_centered() {
        for cfg in [tetrahedron(), octahedron()] {
            let out = center_step(&cfg).unwrap();
            assert!(close(&out, &cfg, 1e-12));
        }
    }

    #[test]
    fn centering_stays_feasible() {
        let cfg = random_configuration(9, 3, 1).unwrap();
        let out = center_step(&cfg).unwrap();
        assert!(constraint_residual(&out) <= 1e-14);
    }

    #[test]
    fn equal_distances_mean_no_move() {
        let st = PackingState::new(octahedron()).unwrap();
        assert_eq!(equalize_step(&st, 0.1).unwrap(), st.cfg);
    }

    #[test]
    fn isolated_point_attracts_neighbours() {
        let cfg = Configuration::from_points(&[
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.6, 0.8, 0.0],
            [0.0, 0.0, -1.0],
        ])
        .unwrap();
        let st = PackingState::new(cfg.clone()).unwrap();
        let far = (0..5).fold(0, |b, i| if st.per_point_dmin[i] > st.per_point_dmin[b] { i } else { b });
        let (a, b, c) = three_nearest(&cfg, far).unwrap();
        let out = equalize_step(&st, 0.1).unwrap();
        for j in [a, b, c] {
            assert!(distance(out.point(j), out.point(far)) < distance(cfg.point(j), cfg.point(far)));
        }
    }

    #[test]
    fn equalize_bounded_loss() {
        for seed in 0..20 {
            let cfg = random_configuration(8, 3, seed).unwrap();
            let st = PackingState::new(cfg).unwrap();
            let out = equalize_step(&st, 0.1).unwrap();
            assert!(min_pair_distance(&out) >= st.d_min - 0.1 * st.d_min - 1e-12);
        }
    }

    #[test]
    fn closed_forms() {
        let o = PackOptions::default();
        assert_eq!(pack(2, &o).unwrap().d_min, 2.0);
        assert!((pack(3, &o).unwrap().d_min - 3f64.sqrt()).abs() < 1e-15);
        assert!((pack(4, &o).unwrap().d_min - (8f64 / 3.0).sqrt()).abs() < 1e-3);
        assert!((pack(6, &o).unwrap().d_min - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn reported_state_is_consistent() {
        let st = pack(7, &PackOptions { restarts: 30, seed: 3, ..Default::default() }).unwrap();
        assert_eq!(st.d_min, min_pair_distance(&st.cfg));
        assert!(st.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*st.history.last().unwrap(), st.d_min);
        assert!(constraint_residual(&st.cfg) <= 1e-14);
        let again = pack(7, &PackOptions { restarts: 30, seed: 3, ..Default::default() }).unwrap();
        assert_eq!(st, again);
    }
}
