//! Run orchestration: specs, multi-start solves, benchmarks and file output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, ThomsonError};
use crate::force::{force_relax, ForceOptions};
use crate::geometry::{
    angles_to_cartesian, random_configuration, residual_of, spherical_energy_and_gradient, spherical_energy_angles,
    to_spherical, Configuration,
};
use crate::gradcheck::{check_gradient, GradCheckReport};
use crate::l1::{default_l1_schedule, l1_penalty_solve, make_ensemble, ProjectionEnsemble, DEFAULT_ROWS};
use crate::packing::{pack, PackOptions};
use crate::relaxation::{auglag_solve, auglag_value, auglag_value_and_gradient, penalty_solve, ContinuationSchedule};
use crate::solution::{SphereSolution, StageTrace};
use crate::solvers::{lbfgs_monitored, nelder_mead, projected_gd, write_trace_csv, SolveReport, SolverOptions, StopReason, TracePoint};
use crate::stochastic::{pair_gradient, pair_objective, sgd_solve, SgdOptions, StepSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SphericalLbfgs,
    ProjectedGd,
    Penalty,
    Auglag,
    Sgd,
    NelderMead,
    Force,
    L1,
    Pack,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::SphericalLbfgs,
        Method::ProjectedGd,
        Method::Penalty,
        Method::Auglag,
        Method::Sgd,
        Method::NelderMead,
        Method::Force,
        Method::L1,
        Method::Pack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SphericalLbfgs => "spherical-lbfgs",
            Method::ProjectedGd => "projected-gd",
            Method::Penalty => "penalty",
            Method::Auglag => "auglag",
            Method::Sgd => "sgd",
            Method::NelderMead => "nelder-mead",
            Method::Force => "force",
            Method::L1 => "l1",
            Method::Pack => "pack",
        }
    }

    /// Methods tied to the ordinary sphere in R^3.
    pub fn requires_k3(self) -> bool {
        matches!(self, Method::SphericalLbfgs | Method::Force | Method::Pack)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ThomsonError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ThomsonError::InvalidSpec(format!("unknown method '{s}'")))
    }
}

pub type Params = BTreeMap<String, Value>;

fn default_k() -> usize {
    3
}

fn default_starts() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub method: Method,
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method_params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(method: Method, n: usize) -> Self {
        Self {
            method,
            n,
            k: 3,
            starts: 1,
            seed: 0,
            method_params: Params::new(),
            output_dir: None,
        }
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.method_params.insert(key.to_string(), value.into());
        self
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        resolve(self).map(|_| ())
    }
}

/// Typed, consumed view of the parameter map; leftover keys are an error.
struct ParamReader<'a> {
    params: &'a Params,
    used: BTreeSet<&'a str>,
}

impl<'a> ParamReader<'a> {
    fn new(params: &'a Params) -> Self {
        Self { params, used: BTreeSet::new() }
    }

    fn raw(&mut self, key: &'a str) -> Option<&'a Value> {
        self.used.insert(key);
        self.params.get(key)
    }

    fn f64(&mut self, key: &'a str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Number(v)) => Ok(v.as_f64()),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| ThomsonError::InvalidSpec(format!("parameter '{key}' must be a number, got '{s}'"))),
            Some(v) => Err(ThomsonError::InvalidSpec(format!("parameter '{key}' must be a number, got {v}"))),
        }
    }

    fn usize(&mut self, key: &'a str) -> Result<Option<usize>> {
        match self.f64(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(Some(v as usize)),
            Some(v) => Err(ThomsonError::InvalidSpec(format!("parameter '{key}' must be a non-negative integer, got {v}"))),
        }
    }

    fn str(&mut self, key: &'a str) -> Result<Option<String>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(v)) => Ok(Some(v.to_string())),
            Some(v) => Err(ThomsonError::InvalidSpec(format!("parameter '{key}' must be a string, got {v}"))),
        }
    }

    fn solver(&mut self, mut base: SolverOptions) -> Result<SolverOptions> {
        if let Some(v) = self.usize("max_iters")? {
            base.max_iters = v;
        }
        if let Some(v) = self.f64("grad_tol")? {
            base.grad_tol = v;
        }
        if let Some(v) = self.f64("f_rel_tol")? {
            base.f_rel_tol = v;
        }
        if let Some(v) = self.usize("memory")? {
            base.memory = v;
        }
        if let Some(v) = self.f64("step_init")? {
            base.step_init = v;
        }
        base.validate().map_err(spec_error)?;
        Ok(base)
    }

    fn schedule(&mut self, default: ContinuationSchedule) -> Result<ContinuationSchedule> {
        match self.str("schedule")? {
            None => Ok(default),
            Some(s) => s.parse().map_err(spec_error),
        }
    }

    fn finish(self) -> Result<()> {
        let unknown: Vec<&str> = self
            .params
            .keys()
            .map(String::as_str)
            .filter(|k| !self.used.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ThomsonError::InvalidSpec(format!("unknown parameter(s): {}", unknown.join(", "))))
        }
    }
}

fn spec_error(e: ThomsonError) -> ThomsonError {
    match e {
        ThomsonError::InvalidSpec(_) => e,
        other => ThomsonError::InvalidSpec(other.to_string()),
    }
}

/// Penalty weight the derivative-free method minimizes at.
const NM_LAMBDA: f64 = 100.0;

enum MethodConfig {
    SphericalLbfgs(SolverOptions),
    ProjectedGd(SolverOptions),
    Penalty(ContinuationSchedule, SolverOptions),
    Auglag(ContinuationSchedule, SolverOptions),
    Sgd(SgdOptions),
    NelderMead { lambda: f64, restarts: usize, opts: SolverOptions },
    Force(ForceOptions),
    L1 { ensemble: ProjectionEnsemble, schedule: ContinuationSchedule, opts: SolverOptions },
    Pack(PackOptions),
}

fn resolve(spec: &RunSpec) -> Result<MethodConfig> {
    let (n, k) = (spec.n, spec.k);
    if n < 2 {
        return Err(ThomsonError::InvalidSpec(format!("n must be >= 2, got {n}")));
    }
    if k < 2 {
        return Err(ThomsonError::InvalidSpec(format!("k must be >= 2, got {k}")));
    }
    if spec.method.requires_k3() && k != 3 {
        return Err(ThomsonError::InvalidSpec(format!("method {} needs k = 3, got {k}", spec.method)));
    }
    if spec.starts == 0 {
        return Err(ThomsonError::InvalidSpec("starts must be >= 1".into()));
    }
    let mut p = ParamReader::new(&spec.method_params);
    let cfg = match spec.method {
        Method::SphericalLbfgs => MethodConfig::SphericalLbfgs(p.solver(SolverOptions::default())?),
        Method::ProjectedGd => MethodConfig::ProjectedGd(p.solver(SolverOptions::default())?),
        Method::Penalty => {
            let s = p.schedule(ContinuationSchedule::default())?;
            MethodConfig::Penalty(s, p.solver(SolverOptions::default())?)
        }
        Method::Auglag => {
            let s = p.schedule(ContinuationSchedule::default())?;
            MethodConfig::Auglag(s, p.solver(SolverOptions::default())?)
        }
        Method::Sgd => {
            let mut o = SgdOptions::tuned(n);
            if let Some(v) = p.f64("lambda")? {
                o.lambda = v;
            }
            if let Some(v) = p.f64("gamma")? {
                o.gamma = v;
            }
            if let Some(v) = p.usize("iters")? {
                o.iters = v;
            }
            if let Some(v) = p.usize("trace_every")? {
                o.trace_every = v;
            }
            if let Some(v) = p.usize("t0")? {
                o.t0 = Some(v);
            }
            if let Some(v) = p.f64("max_scaled_step")? {
                o.max_scaled_step = v;
            }
            if let Some(v) = p.f64("max_displacement")? {
                o.max_displacement = v;
            }
            if let Some(s) = p.str("schedule")? {
                o.schedule = match s.as_str() {
                    "constant" => StepSchedule::Constant,
                    "inverse-time" => StepSchedule::InverseTime,
                    other => return Err(ThomsonError::InvalidSpec(format!("unknown sgd schedule '{other}'"))),
                };
            }
            o.validate(n).map_err(spec_error)?;
            MethodConfig::Sgd(o)
        }
        Method::NelderMead => {
            let lambda = p.f64("lambda")?.unwrap_or(NM_LAMBDA);
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(ThomsonError::InvalidSpec("lambda must be finite and >= 0".into()));
            }
            let restarts = p.usize("restarts")?.unwrap_or(20);
            let opts = p.solver(SolverOptions::default().with_max_iters(1000 * n * k))?;
            MethodConfig::NelderMead { lambda, restarts, opts }
        }
        Method::Force => {
            let mut o = ForceOptions::default();
            if let Some(v) = p.f64("eta")? {
                o.eta = v;
            }
            if let Some(v) = p.usize("passes")? {
                o.passes = v;
            }
            if let Some(v) = p.f64("eta_decay")? {
                o.eta_decay = v;
            }
            if let Some(v) = p.f64("stop_tol")? {
                o.stop_tol = v;
            }
            o.validate().map_err(spec_error)?;
            MethodConfig::Force(o)
        }
        Method::L1 => {
            let m = p.usize("m")?.unwrap_or(DEFAULT_ROWS);
            let schedule = p.schedule(default_l1_schedule())?;
            let opts = p.solver(SolverOptions::default())?;
            let ensemble = make_ensemble(m, k, spec.seed).map_err(spec_error)?;
            MethodConfig::L1 { ensemble, schedule, opts }
        }
        Method::Pack => {
            let mut o = PackOptions::default();
            if let Some(v) = p.usize("restarts")? {
                o.restarts = v;
            }
            if let Some(v) = p.f64("perturb_scale")? {
                o.perturb_scale = v;
            }
            if let Some(v) = p.f64("pull")? {
                o.pull = v;
            }
            if let Some(v) = p.usize("max_sweeps")? {
                o.max_sweeps = v;
            }
            if let Some(v) = p.f64("move_tol")? {
                o.move_tol = v;
            }
            if let Some(v) = p.f64("equal_tol")? {
                o.equal_tol = v;
            }
            if let Some(v) = p.usize("max_rounds")? {
                o.max_rounds = v;
            }
            o.validate().map_err(spec_error)?;
            MethodConfig::Pack(o)
        }
    };
    p.finish()?;
    Ok(cfg)
}

/// Per-start summary as written to the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: usize,
    pub seed: u64,
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
    pub stop_reason: Option<StopReason>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub starts: usize,
    pub seed: u64,
    pub best_start: usize,
    pub best_projected_energy: f64,
    pub mean_energy: f64,
    pub best_residual: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub iterations: usize,
    /// Solve time of the best start.
    pub wall_time_s: f64,
    /// Sum of solve times over all starts.
    pub total_solve_time_s: f64,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_min: Option<f64>,
    pub runs: Vec<StartOutcome>,
}

/// Everything a run produced; the best start's solution is kept in full.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub best: SphereSolution,
    /// Full solution of every start, `None` where that start failed.
    pub solutions: Vec<Option<SphereSolution>>,
}

impl RunOutput {
    /// 0 when the best start converged, 2 when it ran out of iterations.
    pub fn exit_code(&self) -> i32 {
        if self.report.converged {
            0
        } else {
            2
        }
    }
}

struct Extras {
    d_min: Option<f64>,
    l1_residual: Option<f64>,
    norm_deviation: Option<f64>,
}

impl Extras {
    fn none() -> Self {
        Self { d_min: None, l1_residual: None, norm_deviation: None }
    }
}

fn spherical_lbfgs(cfg0: &Configuration, opts: &SolverOptions) -> Result<SphereSolution> {
    let n = cfg0.n();
    let angles = to_spherical(cfg0)?.packed();
    let report = lbfgs_monitored(
        |x: &[f64], g: &mut [f64]| {
            let (phi, theta) = x.split_at(n);
            let (gp, gt) = g.split_at_mut(n);
            spherical_energy_and_gradient(phi, theta, gp, gt)
        },
        &angles,
        opts,
        |x| {
            let (phi, theta) = x.split_at(n);
            residual_of(angles_to_cartesian(phi, theta).coords(), 3)
        },
    )?;
    let (phi, theta) = report.final_point.split_at(n);
    let cfg = angles_to_cartesian(phi, theta);
    SphereSolution::from_final(cfg, report, Vec::new())
}

fn nelder_mead_penalty(cfg0: &Configuration, lambda: f64, restarts: usize, opts: &SolverOptions) -> Result<SphereSolution> {
    let k = cfg0.k();
    let objective = |x: &[f64]| match auglag_value(x, k, lambda, None) {
        Err(ThomsonError::CoincidentPoints { .. }) => Ok(f64::INFINITY),
        other => other,
    };
    let mut x = cfg0.coords().to_vec();
    let mut trace = StageTrace::new();
    let mut last: Option<SolveReport> = None;
    for _ in 0..=restarts {
        let report = nelder_mead(objective, &x, opts)?;
        trace.append(&report);
        let improved = last
            .as_ref()
            .is_none_or(|prev| report.final_value < prev.final_value - 1e-12 * prev.final_value.abs());
        x.clone_from(&report.final_point);
        last = Some(report);
        if !improved {
            break;
        }
    }
    let last = last.expect("at least one simplex run");
    let report = SolveReport {
        final_point: x.clone(),
        final_value: last.final_value,
        iterations: trace.iterations(),
        stop_reason: last.stop_reason,
        wall_time_s: trace.wall_time(),
        trace: trace.points,
    };
    SphereSolution::from_final(cfg0.with_coords(x)?, report, Vec::new())
}

fn pack_solution(n: usize, opts: &PackOptions) -> Result<(SphereSolution, f64)> {
    let t = Instant::now();
    let state = pack(n, opts)?;
    let trace: Vec<TracePoint> = state
        .history
        .iter()
        .enumerate()
        .map(|(i, d)| TracePoint {
            iter: i,
            f: *d,
            grad_norm: f64::NAN,
            residual: residual_of(state.cfg.coords(), 3),
            elapsed_s: 0.0,
        })
        .collect();
    let report = SolveReport {
        final_point: state.cfg.coords().to_vec(),
        final_value: state.d_min,
        iterations: state.history.len() - 1,
        stop_reason: StopReason::Completed,
        wall_time_s: t.elapsed().as_secs_f64(),
        trace,
    };
    Ok((SphereSolution::from_final(state.cfg, report, Vec::new())?, state.d_min))
}

fn solve_one(config: &MethodConfig, n: usize, k: usize, seed: u64) -> Result<(SphereSolution, Extras)> {
    if let MethodConfig::Pack(o) = config {
        let (sol, d) = pack_solution(n, &PackOptions { seed, ..o.clone() })?;
        return Ok((sol, Extras { d_min: Some(d), ..Extras::none() }));
    }
    let cfg0 = random_configuration(n, k, seed)?;
    let sol = match config {
        MethodConfig::SphericalLbfgs(o) => spherical_lbfgs(&cfg0, o)?,
        MethodConfig::ProjectedGd(o) => {
            let r = projected_gd(&cfg0, o)?;
            SphereSolution::from_final(cfg0.with_coords(r.final_point.clone())?, r, Vec::new())?
        }
        MethodConfig::Penalty(s, o) => penalty_solve(&cfg0, s, o)?,
        MethodConfig::Auglag(s, o) => auglag_solve(&cfg0, s, o)?,
        MethodConfig::Sgd(o) => sgd_solve(&cfg0, &SgdOptions { seed, ..o.clone() })?,
        MethodConfig::NelderMead { lambda, restarts, opts } => nelder_mead_penalty(&cfg0, *lambda, *restarts, opts)?,
        MethodConfig::Force(o) => {
            let r = force_relax(&cfg0, o)?;
            SphereSolution::from_final(cfg0.with_coords(r.final_point.clone())?, r, Vec::new())?
        }
        MethodConfig::L1 { ensemble, schedule, opts } => {
            let s = l1_penalty_solve(&cfg0, ensemble, schedule, opts)?;
            let extras = Extras {
                d_min: None,
                l1_residual: Some(s.max_l1_residual()),
                norm_deviation: Some(s.max_norm_deviation()),
            };
            return Ok((s.solution, extras));
        }
        MethodConfig::Pack(_) => unreachable!("handled above"),
    };
    Ok((sol, Extras::none()))
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads.filter(|&t| t > 0) {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| ThomsonError::InvalidOptions(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(job))
}

type StartResult = (StartOutcome, Option<SphereSolution>, Option<ThomsonError>);

fn run_starts(spec: &RunSpec, config: &MethodConfig) -> Vec<StartResult> {
    (0..spec.starts)
        .into_par_iter()
        .map(|start| {
            let seed = spec.seed.wrapping_add(start as u64);
            let t = Instant::now();
            let res = solve_one(config, spec.n, spec.k, seed);
            let wall = t.elapsed().as_secs_f64();
            match res {
                Ok((sol, extra)) => (
                    StartOutcome {
                        start,
                        seed,
                        energy: Some(sol.energy),
                        residual: Some(sol.residual),
                        iterations: sol.report.iterations,
                        stop_reason: Some(sol.report.stop_reason),
                        wall_time_s: wall,
                        d_min: extra.d_min,
                        l1_residual: extra.l1_residual,
                        norm_deviation: extra.norm_deviation,
                        error: None,
                    },
                    Some(sol),
                    None,
                ),
                Err(e) => (
                    StartOutcome {
                        start,
                        seed,
                        energy: None,
                        residual: None,
                        iterations: 0,
                        stop_reason: None,
                        wall_time_s: wall,
                        d_min: None,
                        l1_residual: None,
                        norm_deviation: None,
                        error: Some(e.to_string()),
                    },
                    None,
                    Some(e),
                ),
            }
        })
        .collect()
}

/// Index of the best start: lowest energy, or largest `d_min` for packing.
fn best_index(method: Method, runs: &[StartOutcome]) -> Option<usize> {
    let score = |r: &StartOutcome| -> Option<f64> {
        if method == Method::Pack {
            r.d_min.map(|d| -d)
        } else {
            r.energy
        }
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in runs.iter().enumerate() {
        if let Some(s) = score(r) {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn aggregate(spec: &RunSpec, results: Vec<StartResult>) -> Result<RunOutput> {
    let mut runs = Vec::with_capacity(results.len());
    let mut solutions = Vec::with_capacity(results.len());
    let mut first_error = None;
    for (outcome, sol, err) in results {
        runs.push(outcome);
        solutions.push(sol);
        if first_error.is_none() {
            first_error = err;
        }
    }
    let Some(best_start) = best_index(spec.method, &runs) else {
        return Err(first_error.unwrap_or_else(|| ThomsonError::InvalidSpec("no starts were run".into())));
    };
    let best = solutions[best_start].clone().expect("best start has a solution");
    let energies: Vec<f64> = runs.iter().filter_map(|r| r.energy).collect();
    let mean_energy = energies.iter().sum::<f64>() / energies.len() as f64;
    // For packing the best start maximizes d_min, so the energy column is
    // still the minimum over starts.
    let best_projected_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let report = RunReport {
        method: spec.method,
        n: spec.n,
        k: spec.k,
        starts: spec.starts,
        seed: spec.seed,
        best_start,
        best_projected_energy,
        mean_energy,
        best_residual: best.residual,
        converged: best.report.stop_reason.converged(),
        stop_reason: best.report.stop_reason,
        iterations: best.report.iterations,
        wall_time_s: runs[best_start].wall_time_s,
        total_solve_time_s: runs.iter().map(|r| r.wall_time_s).sum(),
        failures: runs.iter().filter(|r| r.error.is_some()).count(),
        d_min: runs[best_start].d_min,
        runs,
    };
    Ok(RunOutput { report, best, solutions })
}

/// Validates `spec`, solves every start (in parallel on `threads` workers,
/// all available cores when `None`) and writes the output files when
/// `spec.output_dir` is set. Results do not depend on the thread count.
pub fn run(spec: &RunSpec, threads: Option<usize>) -> Result<RunOutput> {
    let config = resolve(spec)?;
    let results = with_pool(threads, || run_starts(spec, &config))?;
    let out = aggregate(spec, results)?;
    if let Some(dir) = &spec.output_dir {
        write_run_files(&out, dir)?;
    }
    Ok(out)
}

pub const CONFIGURATION_FILE: &str = "configuration.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "report.json";

/// Writes the best configuration, its trace and the run report.
pub fn write_run_files(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    export_points(&out.best.projected, &dir.join(CONFIGURATION_FILE), PointFormat::Json)?;
    let trace = BufWriter::new(File::create(dir.join(TRACE_FILE))?);
    write_trace_csv(&out.best.report.trace, trace)?;
    write_json(&out.report, &dir.join(REPORT_FILE))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointFormat {
    Json,
    Csv,
}

impl PointFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(PointFormat::Json),
            "csv" => Some(PointFormat::Csv),
            _ => None,
        }
    }
}

impl FromStr for PointFormat {
    type Err = ThomsonError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(PointFormat::Json),
            "csv" => Ok(PointFormat::Csv),
            _ => Err(ThomsonError::InvalidSpec(format!("unknown point format '{s}'"))),
        }
    }
}

/// Writes `cfg` as JSON or as headerless CSV (one row per point).
pub fn export_points(cfg: &Configuration, path: &Path, format: PointFormat) -> Result<()> {
    match format {
        PointFormat::Json => write_json(cfg, path),
        PointFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
            for p in cfg.points() {
                w.write_record(p.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn import_points(path: &Path, format: PointFormat) -> Result<Configuration> {
    match format {
        PointFormat::Json => Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?),
        PointFormat::Csv => {
            let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
            let mut points: Vec<Vec<f64>> = Vec::new();
            for rec in r.records() {
                let rec = rec?;
                let row = rec
                    .iter()
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| ThomsonError::InvalidConfiguration(format!("cannot parse coordinate '{v}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                points.push(row);
            }
            Configuration::from_points(&points)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub methods: Vec<Method>,
    pub n_list: Vec<usize>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Parameters per method name.
    #[serde(default)]
    pub method_params: BTreeMap<Method, Params>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl BenchmarkSpec {
    pub fn new(methods: Vec<Method>, n_list: Vec<usize>, starts: usize, seed: u64) -> Self {
        Self {
            methods,
            n_list,
            k: 3,
            starts,
            seed,
            method_params: BTreeMap::new(),
            output_dir: None,
        }
    }

    /// Row specs in table order; row `r` uses base seed `seed + r`.
    pub fn row_specs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &method in &self.methods {
            for &n in &self.n_list {
                let r = out.len() as u64;
                out.push(RunSpec {
                    method,
                    n,
                    k: self.k,
                    starts: self.starts,
                    seed: self.seed.wrapping_add(r),
                    method_params: self.method_params.get(&method).cloned().unwrap_or_default(),
                    output_dir: None,
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: Method,
    pub n: usize,
    pub best_projected_energy: f64,
    pub mean_energy: f64,
    pub best_residual: f64,
    pub mean_wall_time_s: f64,
    pub starts: usize,
    pub failures: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    pub fn row(&self, method: Method, n: usize) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.method == method && r.n == n)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "method",
            "n",
            "best_projected_energy",
            "mean_energy",
            "best_residual",
            "mean_wall_time_s",
            "starts",
            "failures",
            "error",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.method.to_string(),
                r.n.to_string(),
                r.best_projected_energy.to_string(),
                r.mean_energy.to_string(),
                r.best_residual.to_string(),
                r.mean_wall_time_s.to_string(),
                r.starts.to_string(),
                r.failures.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for BenchmarkTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>5} {:>16} {:>16} {:>11} {:>11} {:>6}",
            "method", "n", "best energy", "mean energy", "residual", "time (s)", "fails"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16} {:>5} {:>16.6} {:>16.6} {:>11.3e} {:>11.4} {:>6}",
                r.method.name(),
                r.n,
                r.best_projected_energy,
                r.mean_energy,
                r.best_residual,
                r.mean_wall_time_s,
                r.failures
            )?;
        }
        Ok(())
    }
}

/// Runs every (method, n) row. All row specs are validated first; a row
/// whose starts all fail is kept with NaN values and its error message.
pub fn benchmark(spec: &BenchmarkSpec, threads: Option<usize>) -> Result<BenchmarkTable> {
    let rows = spec.row_specs();
    let configs = rows.iter().map(resolve).collect::<Result<Vec<_>>>()?;
    let mut table = BenchmarkTable::default();
    for (row, config) in rows.iter().zip(&configs) {
        let results = with_pool(threads, || run_starts(row, config))?;
        let mean_wall = results.iter().map(|r| r.0.wall_time_s).sum::<f64>() / results.len() as f64;
        if let Some(dir) = &spec.output_dir {
            let traces = dir.join("traces");
            fs::create_dir_all(&traces)?;
            for (outcome, sol, _) in &results {
                if let Some(sol) = sol {
                    let name = format!("{}_n{}_start{}.csv", row.method, row.n, outcome.start);
                    write_trace_csv(&sol.report.trace, BufWriter::new(File::create(traces.join(name))?))?;
                }
            }
        }
        let entry = match aggregate(row, results) {
            Ok(out) => BenchmarkRow {
                method: row.method,
                n: row.n,
                best_projected_energy: out.report.best_projected_energy,
                mean_energy: out.report.mean_energy,
                best_residual: out.report.best_residual,
                mean_wall_time_s: mean_wall,
                starts: row.starts,
                failures: out.report.failures,
                error: None,
            },
            Err(e) => BenchmarkRow {
                method: row.method,
                n: row.n,
                best_projected_energy: f64::NAN,
                mean_energy: f64::NAN,
                best_residual: f64::NAN,
                mean_wall_time_s: mean_wall,
                starts: row.starts,
                failures: row.starts,
                error: Some(e.to_string()),
            },
        };
        table.rows.push(entry);
    }
    if let Some(dir) = &spec.output_dir {
        fs::create_dir_all(dir)?;
        table.write_csv(BufWriter::new(File::create(dir.join("benchmark.csv"))?))?;
        write_json(&table, &dir.join("benchmark.json"))?;
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradObjective {
    /// Energy in angle coordinates (k = 3).
    Spherical,
    Penalty,
    Auglag,
    /// Single-pair objective whose gradients are the SGD pair gradients.
    Pair,
}

impl FromStr for GradObjective {
    type Err = ThomsonError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical" => Ok(GradObjective::Spherical),
            "penalty" => Ok(GradObjective::Penalty),
            "auglag" => Ok(GradObjective::Auglag),
            "pair" => Ok(GradObjective::Pair),
            _ => Err(ThomsonError::InvalidSpec(format!("unknown gradient objective '{s}'"))),
        }
    }
}

/// Random configuration with every point rescaled by a factor in [0.8, 1.2],
/// so constraint terms are active.
fn off_sphere(n: usize, k: usize, seed: u64) -> Result<(Configuration, ChaCha8Rng)> {
    let base = random_configuration(n, k, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut coords = base.coords().to_vec();
    for p in coords.chunks_exact_mut(k) {
        let s: f64 = rng.random_range(0.8..1.2);
        p.iter_mut().for_each(|v| *v *= s);
    }
    Ok((base.with_coords(coords)?, rng))
}

/// Finite-difference check of one analytic gradient at a seeded random point.
pub fn gradcheck(objective: GradObjective, n: usize, k: usize, seed: u64, lambda: f64, h: f64) -> Result<GradCheckReport> {
    match objective {
        GradObjective::Spherical => {
            if k != 3 {
                return Err(ThomsonError::DimensionMismatch { expected: 3, got: k });
            }
            let x0 = to_spherical(&random_configuration(n, 3, seed)?)?.packed();
            check_gradient(
                |x: &[f64]| {
                    let (p, t) = x.split_at(n);
                    spherical_energy_angles(p, t)
                },
                |x: &[f64]| {
                    let (p, t) = x.split_at(n);
                    let mut g = vec![0.0; 2 * n];
                    let (gp, gt) = g.split_at_mut(n);
                    spherical_energy_and_gradient(p, t, gp, gt)?;
                    Ok(g)
                },
                &x0,
                h,
            )
        }
        GradObjective::Penalty | GradObjective::Auglag => {
            let (cfg, mut rng) = off_sphere(n, k, seed)?;
            let mu: Option<Vec<f64>> = (objective == GradObjective::Auglag)
                .then(|| (0..n).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect());
            let mu = mu.as_deref();
            check_gradient(
                |x: &[f64]| auglag_value(x, k, lambda, mu),
                |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    auglag_value_and_gradient(x, k, lambda, mu, &mut g)?;
                    Ok(g)
                },
                cfg.coords(),
                h,
            )
        }
        GradObjective::Pair => {
            let (cfg, _) = off_sphere(n, k, seed)?;
            let (i, l) = (0, 1);
            let with_pair = |x: &[f64]| -> Result<Configuration> {
                let mut c = cfg.coords().to_vec();
                c[i * k..(i + 1) * k].copy_from_slice(&x[..k]);
                c[l * k..(l + 1) * k].copy_from_slice(&x[k..]);
                cfg.with_coords(c)
            };
            let x0: Vec<f64> = cfg.point(i).iter().chain(cfg.point(l)).copied().collect();
            check_gradient(
                |x: &[f64]| pair_objective(&with_pair(x)?, i, l, lambda),
                |x: &[f64]| {
                    let c = with_pair(x)?;
                    let mut g = pair_gradient(&c, i, l, lambda)?;
                    g.extend(pair_gradient(&c, l, i, lambda)?);
                    Ok(g)
                },
                &x0,
                h,
            )
        }
    }
}
