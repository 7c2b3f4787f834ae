use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thomson_core::harness::{
    self, export_points, import_points, BenchmarkSpec, GradObjective, Method, Params, PointFormat, RunSpec,
};

#[derive(Parser, Debug)]
#[command(name = "thomson", version, about = "Minimum-energy point configurations on the unit sphere")]
struct Cli {
    /// Base seed; start i uses seed + i.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent starts (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress the text summary.
    #[arg(long, short, global = true)]
    quiet: bool,

    /// JSON run spec (or benchmark spec for `benchmark`); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem instance from several random starts.
    Solve(SolveArgs),
    /// Compare methods over a list of point counts.
    Benchmark(BenchArgs),
    /// Check an analytic gradient against forward differences.
    Gradcheck(GradArgs),
    /// Spread points to maximize the minimum pairwise distance.
    Pack(PackArgs),
    /// Convert a configuration file between JSON and CSV.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    /// Method parameter, `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Continuation schedule, e.g. `1,10,100` or `1:1e-3,100:1e-8`.
    #[arg(long)]
    lambda_schedule: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    passes: Option<usize>,
    /// Rows of the projection ensemble (l1).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Comma-separated point counts.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    /// `method.key=value`; repeatable.
    #[arg(long = "param", value_name = "METHOD.KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args, Debug)]
struct GradArgs {
    #[arg(long, value_parser = parse_objective)]
    objective: GradObjective,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = thomson_core::gradcheck::DEFAULT_STEP)]
    h: f64,
    /// Also print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct PackArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Configuration file (JSON or headerless CSV).
    input: PathBuf,
    /// Destination; defaults to `<out>/<input stem>.<format>`.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<PointFormat>,
    #[arg(long, value_parser = parse_format)]
    input_format: Option<PointFormat>,
}

fn parse_objective(s: &str) -> Result<GradObjective, String> {
    s.parse().map_err(|e: thomson_core::ThomsonError| e.to_string())
}

fn parse_format(s: &str) -> Result<PointFormat, String> {
    s.parse().map_err(|e: thomson_core::ThomsonError| e.to_string())
}

/// Numbers stay numbers, anything else is passed on as a string.
fn param_value(raw: &str) -> Value {
    match serde_json::from_str::<Value>(raw) {
        Ok(v @ (Value::Number(_) | Value::Bool(_))) => v,
        _ => Value::String(raw.to_string()),
    }
}

fn parse_param(raw: &str) -> Result<(String, Value)> {
    let (k, v) = raw
        .split_once('=')
        .with_context(|| format!("parameter '{raw}' is not of the form key=value"))?;
    Ok((k.trim().to_string(), param_value(v.trim())))
}

fn build_run_spec(cli: &Cli, a: &SolveArgs) -> Result<RunSpec> {
    let mut spec = match &cli.config {
        Some(path) => RunSpec::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let method = a.method.context("--method is required without --config")?;
            let n = a.n.context("--n is required without --config")?;
            RunSpec::new(method, n)
        }
    };
    if let Some(m) = a.method {
        spec.method = m;
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(k) = a.k {
        spec.k = k;
    }
    if let Some(s) = a.starts {
        spec.starts = s;
    }
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if cli.out.is_some() {
        spec.output_dir.clone_from(&cli.out);
    }
    let p = &mut spec.method_params;
    for raw in &a.params {
        let (k, v) = parse_param(raw)?;
        p.insert(k, v);
    }
    if let Some(s) = &a.lambda_schedule {
        p.insert("schedule".into(), Value::String(s.clone()));
    }
    let numbers = [
        ("lambda", a.lambda),
        ("gamma", a.gamma),
        ("eta", a.eta),
    ];
    for (key, v) in numbers {
        if let Some(v) = v {
            p.insert(key.into(), json!(v));
        }
    }
    let counts = [
        ("iters", a.iters),
        ("passes", a.passes),
        ("m", a.m),
        ("max_iters", a.max_iters),
        ("restarts", a.restarts),
    ];
    for (key, v) in counts {
        if let Some(v) = v {
            p.insert(key.into(), json!(v));
        }
    }
    Ok(spec)
}

fn solve(cli: &Cli, a: &SolveArgs) -> Result<i32> {
    let spec = build_run_spec(cli, a)?;
    let out = harness::run(&spec, cli.threads)?;
    let r = &out.report;
    if !cli.quiet {
        println!("method            {}", r.method);
        println!("n, k              {}, {}", r.n, r.k);
        println!("starts            {} ({} failed)", r.starts, r.failures);
        println!("best energy       {:.10}", r.best_projected_energy);
        println!("mean energy       {:.10}", r.mean_energy);
        println!("residual          {:.3e}", r.best_residual);
        if let Some(d) = r.d_min {
            println!("d_min             {d:.10}");
        }
        if let Some(run) = r.runs.get(r.best_start) {
            if let (Some(l1), Some(nd)) = (run.l1_residual, run.norm_deviation) {
                println!("l1 residual       {l1:.3e}");
                println!("norm deviation    {nd:.3e}");
            }
        }
        println!("stop reason       {:?} after {} iterations", r.stop_reason, r.iterations);
        println!("solve time        {:.4} s", r.wall_time_s);
        if let Some(dir) = &spec.output_dir {
            println!("files             {}", dir.display());
        }
    }
    Ok(out.exit_code())
}

fn build_bench_spec(cli: &Cli, a: &BenchArgs) -> Result<BenchmarkSpec> {
    let mut spec = match &cli.config {
        Some(path) => {
            let file = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_reader(file).with_context(|| format!("parsing {}", path.display()))?
        }
        None => BenchmarkSpec::new(Vec::new(), Vec::new(), 1, 0),
    };
    if !a.methods.is_empty() {
        spec.methods.clone_from(&a.methods);
    }
    if !a.n_list.is_empty() {
        spec.n_list.clone_from(&a.n_list);
    }
    if let Some(k) = a.k {
        spec.k = k;
    }
    if let Some(s) = a.starts {
        spec.starts = s;
    }
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if cli.out.is_some() {
        spec.output_dir.clone_from(&cli.out);
    }
    for raw in &a.params {
        let (key, v) = parse_param(raw)?;
        let (method, key) = key
            .split_once('.')
            .with_context(|| format!("benchmark parameter '{raw}' must be method.key=value"))?;
        let method: Method = method.parse()?;
        spec.method_params.entry(method).or_insert_with(Params::new).insert(key.to_string(), v);
    }
    if spec.methods.is_empty() || spec.n_list.is_empty() {
        bail!("benchmark needs at least one method and one n");
    }
    Ok(spec)
}

fn benchmark(cli: &Cli, a: &BenchArgs) -> Result<i32> {
    let spec = build_bench_spec(cli, a)?;
    let table = harness::benchmark(&spec, cli.threads)?;
    if !cli.quiet {
        print!("{table}");
        for r in table.rows.iter().filter(|r| r.error.is_some()) {
            eprintln!("{} n={}: {}", r.method, r.n, r.error.as_deref().unwrap_or_default());
        }
    }
    if cli.quiet && spec.output_dir.is_none() {
        table.write_csv(std::io::stdout().lock())?;
    }
    Ok(0)
}

fn gradcheck(cli: &Cli, a: &GradArgs) -> Result<i32> {
    let rep = harness::gradcheck(a.objective, a.n, a.k, cli.seed.unwrap_or(0), a.lambda, a.h)?;
    if !cli.quiet {
        println!("{rep}");
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
    }
    Ok(if rep.passed { 0 } else { 1 })
}

fn pack(cli: &Cli, a: &PackArgs) -> Result<i32> {
    let mut spec = RunSpec::new(Method::Pack, a.n).with_seed(cli.seed.unwrap_or(0));
    for raw in &a.params {
        let (k, v) = parse_param(raw)?;
        spec.method_params.insert(k, v);
    }
    if let Some(r) = a.restarts {
        spec.method_params.insert("restarts".into(), json!(r));
    }
    let out = harness::run(&spec, cli.threads)?;
    let d_min = out.report.d_min.context("packing produced no distance")?;
    let doc = json!({ "d_min": d_min, "configuration": out.best.projected });
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("pack.json");
        std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if !cli.quiet {
        eprintln!(
            "n = {}: d_min = {:.10} ({:.6} deg), energy {:.6}",
            a.n,
            d_min,
            2.0 * (d_min / 2.0).asin().to_degrees(),
            out.best.energy
        );
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(0)
}

fn format_of(path: &Path, given: Option<PointFormat>) -> Result<PointFormat> {
    given
        .or_else(|| PointFormat::from_path(path))
        .with_context(|| format!("cannot tell the format of {}; pass it explicitly", path.display()))
}

fn export(cli: &Cli, a: &ExportArgs) -> Result<i32> {
    let cfg = import_points(&a.input, format_of(&a.input, a.input_format)?)?;
    let output = match (&a.output, a.format) {
        (Some(p), _) => p.clone(),
        (None, Some(f)) => {
            let stem = a.input.file_stem().context("input has no file name")?;
            let ext = match f {
                PointFormat::Json => "json",
                PointFormat::Csv => "csv",
            };
            cli.out.clone().unwrap_or_else(|| PathBuf::from(".")).join(stem).with_extension(ext)
        }
        (None, None) => bail!("give --output or --format"),
    };
    let format = format_of(&output, a.format)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    export_points(&cfg, &output, format)?;
    if !cli.quiet {
        println!("wrote {} points to {}", cfg.n(), output.display());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Solve(a) => solve(&cli, a),
        Command::Benchmark(a) => benchmark(&cli, a),
        Command::Gradcheck(a) => gradcheck(&cli, a),
        Command::Pack(a) => pack(&cli, a),
        Command::Export(a) => export(&cli, a),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
