use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn thomson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thomson"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = thomson(&["solve", "--method", "spherical-lbfgs", "--n", "4", "--starts", "3", "--out", out, "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    let e = report["best_projected_energy"].as_f64().unwrap();
    assert!((e - 2.25).abs() < 1e-6, "{e}");
    assert_eq!(report["runs"].as_array().unwrap().len(), 3);
    let cfg = read_json(&dir.path().join("configuration.json"));
    assert_eq!(cfg["n"], 4);
    assert_eq!(cfg["coords"].as_array().unwrap().len(), 4);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iter,f,grad_norm,residual,elapsed_s");
}

#[test]
fn max_iters_exit_code() {
    let o = thomson(&["solve", "--method", "projected-gd", "--n", "12", "--max-iters", "2", "-q"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_specs_exit_one() {
    let o = thomson(&["solve", "--method", "pack", "--n", "6", "--k", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k = 3"));
    let o = thomson(&["solve", "--method", "penalty", "--n", "6", "--param", "bogus=1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = thomson(&["solve", "--method", "penalty", "--n", "6", "--lambda-schedule", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    fs::write(&cfg, r#"{"method":"penalty","n":3,"starts":2,"seed":5,"method_params":{"schedule":"1,100"}}"#).unwrap();
    let out = dir.path().join("run");
    let o = thomson(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "solve",
        "--n",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["n"], 4);
    assert_eq!(report["seed"], 5);
    assert_eq!(report["runs"][1]["seed"], 6);
}

#[test]
fn same_seed_same_trace_any_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(threads);
        let o = thomson(&[
            "solve", "--method", "auglag", "--n", "7", "--starts", "3", "--seed", "9", "--threads", threads, "--out",
            out.to_str().unwrap(), "-q",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let t = fs::read_to_string(out.join("trace.csv")).unwrap();
        let no_time: Vec<String> =
            t.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect();
        traces.push(no_time);
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn gradcheck_text_and_json() {
    let o = thomson(&["gradcheck", "--objective", "auglag", "--n", "5", "--k", "4", "--seed", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("Passed: true"));
    let json_start = s.find("{\n").unwrap();
    let v: serde_json::Value = serde_json::from_str(&s[json_start..]).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(thomson(&["gradcheck", "--objective", "nope"]).status.code(), Some(2));
}

#[test]
fn pack_prints_json() {
    let o = thomson(&["pack", "--n", "4", "--restarts", "5", "--seed", "1", "-q"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let d = v["d_min"].as_f64().unwrap();
    assert!((d - (8.0f64 / 3.0).sqrt()).abs() < 1e-3, "{d}");
    assert_eq!(v["configuration"]["n"], 4);
}

#[test]
fn export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("pair.json");
    fs::write(&json, r#"{"k":3,"n":2,"coords":[[0.0,0.0,1.0],[0.0,0.0,-1.0]]}"#).unwrap();
    let csv = dir.path().join("pair.csv");
    let o = thomson(&["export", json.to_str().unwrap(), "--output", csv.to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&csv).unwrap(), "0,0,1\n0,0,-1\n");
    let back = dir.path().join("back.json");
    let o = thomson(&["export", csv.to_str().unwrap(), "--output", back.to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&back), read_json(&json));
}

#[test]
fn benchmark_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = thomson(&[
        "benchmark",
        "--methods",
        "penalty,auglag",
        "--n-list",
        "3,4",
        "--starts",
        "2",
        "--param",
        "penalty.max_iters=500",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("benchmark.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(stdout(&o).contains("auglag"));
    assert!(dir.path().join("traces/auglag_n4_start1.csv").exists());
}
