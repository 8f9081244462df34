//! Runs the `cylpot` binary on the sample models.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn cylpot(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylpot"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn write_probes(dir: &Path, rows: &str) -> PathBuf {
    let path = dir.join("probes.csv");
    std::fs::write(&path, rows).unwrap();
    path
}

fn strip_exact(x: f64, theta: f64) -> f64 {
    let k = 2f64.sqrt();
    x.cos() * (k * (PI - theta)).sinh() / (k * PI).sinh()
}

#[test]
fn spectrum_writes_csv_and_report() {
    let dir = TempDir::new().unwrap();
    let o = cylpot(dir.path(), &["spectrum", "--model", model("strip.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "spectrum.csv");
    assert!(csv.starts_with("k,mu,residual\n"));
    let first: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - 1.0).abs() < 1e-12);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "spectrum.json")).unwrap();
    assert_eq!(report["seed"], 7);
}

#[test]
fn strip_mode_solve_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let probes = write_probes(dir.path(), "x,theta\n0.0,1.0\n1.5,2.0\n-2.0,0.5\n");
    let o = cylpot(
        dir.path(),
        &[
            "solve",
            "--model",
            model("strip.json").to_str().unwrap(),
            "--bc",
            "mode:xi=1,curve=0",
            "--probes",
            probes.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "solve.csv");
    for row in csv.lines().skip(1) {
        let v: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v[2] - strip_exact(v[0], v[1])).abs() < 1e-10, "{row}");
    }
}

#[test]
fn manufactured_disk_solve_reports_errors() {
    let dir = TempDir::new().unwrap();
    let probes = write_probes(dir.path(), "0.1,3.2\n-0.2,3.0\n");
    let o = cylpot(
        dir.path(),
        &[
            "solve",
            "--model",
            model("disk.json").to_str().unwrap(),
            "--bc",
            "green:x=0.3,theta=4.0",
            "--probes",
            probes.to_str().unwrap(),
            "--grid",
            "nodes=128",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "solve.json")).unwrap();
    assert!(report["max_probe_error"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["diagnostics"]["nodes"], 128);
    assert!(report["diagnostics"]["condition"].as_f64().unwrap() < 1e6);
}

#[test]
fn reports_are_deterministic_for_a_seed() {
    let strip = model("strip.json");
    let args = ["rellich-check", "--model", strip.to_str().unwrap(), "--seed", "11"];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(code(&cylpot(a.path(), &args)), 0);
    assert_eq!(code(&cylpot(b.path(), &args)), 0);
    for name in ["rellich_check.json", "rellich_check.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name));
    }
    let c = TempDir::new().unwrap();
    let mut other = args;
    other[4] = "12";
    assert_eq!(code(&cylpot(c.path(), &other)), 0);
    assert_ne!(read(a.path(), "rellich_check.csv"), read(c.path(), "rellich_check.csv"));
    assert!(read(c.path(), "rellich_check.json").contains("\"seed\": 12"));
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let strip = model("strip.json");
    let strip = strip.to_str().unwrap();
    let disk = model("disk.json");
    let bad_probes = write_probes(dir.path(), "0.0,1.0\n0.0,4.0\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["spectrum"],
        vec!["spectrum", "--model", "/nonexistent/model.json"],
        vec!["spectrum", "--model", strip, "--tol", "nonsense=1"],
        vec!["spectrum", "--model", strip, "--grid", "cutoff"],
        vec!["solve", "--model", strip, "--bc", "wave:k=2", "--probes", bad_probes.to_str().unwrap()],
        vec!["solve", "--model", strip, "--bc", "const", "--probes", bad_probes.to_str().unwrap()],
        vec!["tau-sweep", "--model", disk.to_str().unwrap()],
        vec!["acceptance", "--grid", "criterion=11"],
        vec!["no-such-command"],
    ];
    for args in cases {
        let o = cylpot(dir.path(), &args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn missed_tolerance_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let o = cylpot(
        dir.path(),
        &["kernel-check", "--model", model("strip.json").to_str().unwrap(), "--grid", "pairs=50", "--tol", "fundamental=1e-12"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("fundamental residual"));
    // the report is still written
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "kernel_check.json")).unwrap();
    assert_eq!(report["pairs_tested"], 50);
    assert!(report["max_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn single_acceptance_criterion() {
    let dir = TempDir::new().unwrap();
    let o = cylpot(dir.path(), &["acceptance", "--grid", "criterion=3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("AC3  PASS"));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "acceptance.json")).unwrap();
    assert_eq!(report["criteria"][0]["passed"], true);
}
