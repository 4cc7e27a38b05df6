use std::f64::consts::SQRT_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_spindisk");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn error_line(out: &Output) -> String {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    err
}

#[test]
fn corr_triangle_csv() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tri.json", r#"{"theta": []}"#);
    let out = run(&["corr", &model]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# spindisk "));
    assert!(text.contains("# config: "));
    let rows = data_lines(&text);
    assert_eq!(rows[0], "gamma,rho,cos_ref,tri_ref");
    assert_eq!(rows.len(), 722);
    for row in &rows[1..] {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - v[3]).abs() < 1e-12);
    }
}

#[test]
fn corr_writes_file_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "mix.json", r#"{"components": [{"w": 0.5, "theta": []}, {"w": 0.5, "theta": [0.5, 1.0]}]}"#);
    let target = dir.path().join("curve.csv");
    let out = run(&["corr", &model, "--grid", "11", "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(data_lines(&fs::read_to_string(&target).unwrap()).len(), 12);
    let leftovers = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn bad_models_report_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let odd = write(dir.path(), "odd.json", r#"{"theta": [0.5]}"#);
    assert!(error_line(&run(&["corr", &odd])).starts_with("error kind=ValidationError"));
    let broken = write(dir.path(), "broken.json", "{theta");
    assert!(error_line(&run(&["corr", &broken])).starts_with("error kind=ParseError"));
    let weights = write(dir.path(), "w.json", r#"{"components": [{"w": 0.7, "theta": []}]}"#);
    assert!(error_line(&run(&["corr", &weights])).starts_with("error kind=ValidationError"));
    let missing = dir.path().join("absent.json");
    assert!(error_line(&run(&["corr", missing.to_str().unwrap()])).starts_with("error kind=IoError"));
}

#[test]
fn sim_is_deterministic_in_seed() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", r#"{"theta": [0.4, 2.0]}"#);
    let go = |seed: &str| {
        let out = run(&["sim", &model, "--grid", "4", "--runs", "20000", "--seed", seed]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(go("7"), go("7"));
    assert_ne!(data_lines(&go("7")), data_lines(&go("8")));
}

#[test]
fn sim_outputs_and_certainty() {
    let dir = tempfile::tempdir().unwrap();
    let corr = dir.path().join("corr.csv");
    let log = dir.path().join("log.csv");
    let out = run(&[
        "sim", "--quantum", "--alpha", "1.0", "--beta", "1.0", "--runs", "5000",
        "--corr-out", corr.to_str().unwrap(), "--log", log.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&table);
    assert_eq!(rows[0], "alpha,beta,npp,npm,nmp,nmm");
    let v: Vec<&str> = rows[1].split(',').collect();
    assert_eq!((v[2], v[5]), ("0", "0"));
    let corr = fs::read_to_string(&corr).unwrap();
    let c = data_lines(&corr);
    assert_eq!(c[0], "alpha,beta,n,estimate,std_error,exact");
    assert!(c[1].contains(",5000,-1.0"));
    assert_eq!(data_lines(&fs::read_to_string(&log).unwrap()).len(), 5001);
}

#[test]
fn sim_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", r#"{"theta": []}"#);
    assert!(error_line(&run(&["sim", &model, "--quantum", "--continuous"])).contains("UsageError"));
    assert!(error_line(&run(&["sim", &model])).contains("UsageError"));
    assert!(error_line(&run(&["sim", &model, "--pairs", "0-1"])).contains("ParseError"));
    assert!(error_line(&run(&["sim", &model, "--continuous", "--runs", "0"])).contains("UsageError"));
}

#[test]
fn demo_figure_panels() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("fig");
    let out = run(&["demo-figure", "--outdir", outdir.to_str().unwrap(), "--grid", "37"]);
    assert!(out.status.success());
    for i in 1..=12 {
        let text = fs::read_to_string(outdir.join(format!("panel_{i:02}.csv"))).unwrap();
        assert!(text.contains("# seed: 0"));
        assert_eq!(data_lines(&text).len(), 38);
    }
    assert!(error_line(&run(&["demo-figure", "--nswitch", "3", "--outdir", outdir.to_str().unwrap()]))
        .contains("UsageError"));
}

#[test]
fn spectrum_report() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tri.json", r#"{"theta": []}"#);
    let report = dir.path().join("r.json");
    let out = run(&["spectrum", &model, "--nmax", "9", "--report", report.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "n,re_fhat,im_fhat,a_n");
    assert_eq!(rows.len(), 11);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["nonzero_count"], 5);
    assert_eq!(r["first_harmonic"]["holds"], true);
    assert!(r["_meta"]["version"].is_string());
}

#[test]
fn optimize_triangle() {
    let out = run(&["optimize", "--k", "0"]);
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let oracle = (5.0 / 6.0 - 8.0 / (std::f64::consts::PI.powi(2))).sqrt();
    assert!((r["distance"].as_f64().unwrap() - oracle).abs() < 1e-12);
    assert_eq!(r["metric"], "L2");
    assert_eq!(r["_meta"]["seed"], 0);
    assert!(error_line(&run(&["optimize", "--k", "3"])).contains("OptimizeError"));
}

#[test]
fn chsh_quantum_and_model() {
    let out = run(&["chsh", "--quantum"]);
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["max_abs_S"].as_f64().unwrap() - 2.0 * SQRT_2).abs() < 1e-2);
    assert_eq!(r["settings"].as_array().unwrap().len(), 4);

    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tri.json", r#"{"theta": []}"#);
    let out = run(&["chsh", &model]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["max_abs_S"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn lattice_command() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "l.json", r#"{"N": 8, "switch_indices": []}"#);
    let out = run(&["lattice", &model]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "d,rho");
    assert_eq!(rows[1], "0,-1.0000000000000000e0");
    let bad = write(dir.path(), "b.json", r#"{"N": 8, "switch_indices": [5]}"#);
    assert!(error_line(&run(&["lattice", &bad])).contains("ValidationError"));
}
