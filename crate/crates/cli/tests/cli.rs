use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BASE: &str = "[problem]\ns = 0.5\nmu = 0.02\n[grid]\nnx = 128\nny = 64\n\
                    [evolution]\nn = 64\nturnovers = 0.05\nsamples = 2\n";

fn gsqg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsqg")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn listing(dir: &TempDir) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn solve_writes_field_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.cfg", BASE);
    let o = gsqg(&["solve", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&dir), ["run.cfg", "run.csv", "run.json"]);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["speed"].as_f64().unwrap() > 0.0);
    assert!(meta["residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(meta["grid"]["nx"], 128);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    // same config, same bytes
    let first = fs::read(dir.path().join("run.csv")).unwrap();
    let o = gsqg(&["solve", "--config", s(&cfg), "--out", s(&dir.path().join("again"))]);
    assert_eq!(code(&o), 0);
    assert_eq!(first, fs::read(dir.path().join("again.csv")).unwrap());
}

#[test]
fn resume_continues_from_a_saved_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.cfg", BASE);
    assert_eq!(code(&gsqg(&["solve", "--config", s(&cfg)])), 0);
    let prefix = dir.path().join("run");
    let out = dir.path().join("resumed");
    let o = gsqg(&["solve", "--config", s(&cfg), "--resume", s(&prefix), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("resuming from"));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("resumed.json")).unwrap()).unwrap();
    assert!(meta["iterations"].as_u64().unwrap() <= 2, "{}", meta["iterations"]);
    assert!(meta["resumed_from"].as_str().unwrap().ends_with("run"));
}

#[test]
fn distance_of_a_field_to_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.cfg", BASE);
    assert_eq!(code(&gsqg(&["solve", "--config", s(&cfg)])), 0);
    let a = dir.path().join("run.csv");
    let o = gsqg(&["distance", s(&a), s(&a)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);
}

#[test]
fn verify_kernel_prints_the_point_value() {
    let o = gsqg(&["verify-kernel", "--s", "0.5"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("1/(3 pi)"));
    assert!(!out.contains("FAIL"));
    assert!(out.lines().filter(|l| l.ends_with("pass")).count() >= 5);
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gsqg(&["frobnicate"])), 1);
    assert_eq!(code(&gsqg(&["solve", "--bogus"])), 1);
    assert_eq!(code(&gsqg(&[])), 1);
    assert_eq!(code(&gsqg(&["--help"])), 0);
    let typo = write_config(&dir, "typo.cfg", "[problem]\ns = 0.5\nmu = 0.02\nlamda = 2\n");
    let o = gsqg(&["solve", "--config", s(&typo)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));
    let bad = write_config(&dir, "bad.cfg", "[problem]\ns = 2\nmu = 0.02\n");
    assert_eq!(code(&gsqg(&["solve", "--config", s(&bad)])), 1);
    assert_eq!(code(&gsqg(&["solve", "--config", s(&dir.path().join("missing.cfg"))])), 1);
}

#[test]
fn numerical_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "short.cfg", &format!("{BASE}[solver]\nmax_iter = 2\n"));
    let o = gsqg(&["solve", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no convergence"));
}

#[test]
fn negative_vorticity_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("neg.csv");
    let mut text = String::from("x1,x2,value\n");
    for j in 0..8 {
        for i in 0..16 {
            let v = if (i, j) == (3, 2) { -1.0 } else { 0.5 };
            text.push_str(&format!("{},{},{v}\n", -1.0 + (i as f64 + 0.5) * 0.125, (j as f64 + 0.5) * 0.125));
        }
    }
    fs::write(&p, text).unwrap();
    let o = gsqg(&["distance", s(&p), s(&p)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid field"));
    fs::write(&p, "x1,x2,value\n0.1,0.1,1\n").unwrap();
    assert_eq!(code(&gsqg(&["distance", s(&p), s(&p)])), 1);
}

#[test]
fn lamb_writes_analytic_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "lamb.cfg", "[problem]\ns = 1\nmu = 0.02\nlambda = 50\n[grid]\nhalf_width = 1\nheight = 1\nnx = 64\nny = 32\n");
    let o = gsqg(&["lamb", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&dir), ["lamb.cfg", "lamb_lamb.json", "lamb_omega.csv", "lamb_psi.csv"]);
    let sqg = write_config(&dir, "sqg.cfg", BASE);
    assert_eq!(code(&gsqg(&["lamb", "--config", s(&sqg)])), 1);
}

#[test]
fn rescale_moves_to_the_scaled_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.cfg", BASE);
    assert_eq!(code(&gsqg(&["solve", "--config", s(&cfg)])), 0);
    let out = dir.path().join("scaled.csv");
    let o = gsqg(&["rescale", "--input", s(&dir.path().join("run.csv")), "--s", "0.5", "--lambda", "4", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // lambda^{1/2s} = 4 stretches the half-width from 8 to 32 and h from 1/8 to 1/2
    let text = fs::read_to_string(&out).unwrap();
    let second = text.lines().nth(1).unwrap();
    let x1: f64 = second.split(',').next().unwrap().parse().unwrap();
    assert!((x1 + 32.0 - 0.25).abs() < 1e-12, "{x1}");
}

#[test]
fn evolve_and_stability_write_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.cfg", &format!("{BASE}horizon = 1000.0\nperturbation = 0.01\n"));
    assert_eq!(code(&gsqg(&["solve", "--config", s(&cfg)])), 0);
    let prefix = dir.path().join("run");

    let o = gsqg(&["stability", "--config", s(&cfg), "--input", s(&prefix)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(dir.path().join("run_trace.csv")).unwrap();
    assert!(trace.starts_with("time,distance,mass,upper_mass,impulse,kinetic,l2,lps,centroid_x1\n"));
    assert_eq!(trace.lines().count(), 1 + 3);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run_trace.json")).unwrap()).unwrap();
    assert!(meta["substitution"].as_str().unwrap().contains("periodic box"));
    assert!(meta["stream_mismatch"].as_f64().is_some());
    assert!(meta["perturbation"].as_f64().unwrap() > 0.0);

    let out = dir.path().join("ev");
    let o = gsqg(&["evolve", "--config", s(&cfg), "--input", s(&dir.path().join("run.csv")), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ev_trace.csv", "ev_trace.json", "ev_final.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let no_horizon = write_config(&dir, "nh.cfg", BASE);
    assert_eq!(code(&gsqg(&["evolve", "--config", s(&no_horizon), "--input", s(&dir.path().join("run.csv"))])), 1);
}
