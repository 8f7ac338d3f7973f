use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperop"))
        .args(args)
        .current_dir(dir)
        .env_remove("HYPEROP_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn first_number(o: &Output) -> f64 {
    stdout(o).split_whitespace().next().unwrap().parse().unwrap()
}

/// Depth-40 nesting `exp(s - 1 + exp(s - 2 + ...))` evaluated from the inside out.
fn phi_oracle(s: f64) -> f64 {
    (1..=40).rev().fold(0.0, |z, j| (s - j as f64 + z).exp())
}

#[test]
fn eval_normalization_and_first_step() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["eval", "--k", "2", "--t", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1.0");
    let o = run_in(d.path(), &["eval", "--k", "2", "--t", "1"]);
    assert_eq!(code(&o), 0);
    assert!((first_number(&o) - std::f64::consts::E).abs() < 1e-12);
}

#[test]
fn eval_outside_domain_exits_two_with_edge() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["eval", "--k", "2", "--t", "-2"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("domain"), "{}", stderr(&o));
    assert!(stderr(&o).contains("-2"));
    let o = run_in(d.path(), &["eval", "--k", "3", "--t", "-3", "--inverse"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("-1.85039"), "{}", stderr(&o));
}

#[test]
fn eval_guarded_jet_and_json() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["eval", "--k", "3", "--t", "3", "--guarded"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("exp^"));
    let o = run_in(d.path(), &["eval", "--k", "2", "--t", "5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--guarded"));

    let o = run_in(d.path(), &["eval", "--k", "2", "--t", "0.5", "--jet", "3"]);
    assert_eq!(code(&o), 0);
    let jet_line = stdout(&o).lines().find(|l| l.starts_with("jet:")).unwrap().to_string();
    assert_eq!(jet_line.split_whitespace().count(), 5);

    let o = run_in(d.path(), &["--format", "json", "eval", "--k", "3", "--t", "0.25"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["value"].as_f64().unwrap() > 1.0);
    assert_eq!(v["convergence"]["report"]["converged"], Value::Bool(true));
}

#[test]
fn usage_errors_exit_two() {
    let d = TempDir::new().unwrap();
    for args in [
        &["eval", "--k", "2"][..],
        &["eval", "--k", "0", "--t", "1"],
        &["eval", "--k", "5", "--t", "1"],
        &["--jet-order", "13", "eval", "--k", "2", "--t", "0"],
        &["--tolerance=-1", "verify"],
        &["--max-level", "0", "verify"],
        &["frobnicate"],
    ] {
        let o = run_in(d.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    assert_eq!(code(&run_in(d.path(), &["--help"])), 0);
}

#[test]
fn table_rows_and_normalization() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["table", "--k", "2", "--from", "-1", "--to", "1", "--step", "0.5", "--out", "t.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(d.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,value,first_derivative,residual,status");
    assert_eq!(lines.len(), 6);
    let zero: Vec<&str> = lines.iter().find(|l| l.starts_with("0.0,")).unwrap().split(',').collect();
    assert!((zero[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!(!text.contains('\r'));
}

#[test]
fn table_ladder_and_clipped_rows() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["table", "--k", "3", "--from", "-3", "--to", "0", "--step", "1", "--out", "l.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(d.path().join("l.csv")).unwrap();
    for (t, want) in [("-2.0", -1.0), ("-1.0", 0.0), ("0.0", 1.0)] {
        let row: Vec<&str> = text.lines().find(|l| l.starts_with(&format!("{t},"))).unwrap().split(',').collect();
        assert!((row[1].parse::<f64>().unwrap() - want).abs() < 1e-8, "t={t}: {}", row[1]);
        assert!(row[3].parse::<f64>().unwrap() < 1e-8);
    }

    let o = run_in(d.path(), &["table", "--k", "2", "--from", "-3", "--to", "-1", "--step", "0.5", "--out", "c.csv"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(d.path().join("c.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("outside_domain")).count(), 3);
    assert_eq!(text.lines().filter(|l| l.ends_with(",ok")).count(), 2);
}

#[test]
fn table_empty_range_and_unwritable_path() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["table", "--k", "2", "--from", "1", "--to", "0", "--step", "0.5", "--out", "e.csv"]);
    assert_eq!(code(&o), 2);
    assert!(!d.path().join("e.csv").exists());
    let o = run_in(d.path(), &["table", "--k", "2", "--from", "0", "--to", "1", "--step", "0", "--out", "e.csv"]);
    assert_eq!(code(&o), 2);
    let o = run_in(d.path(), &["table", "--k", "2", "--from", "0", "--to", "1", "--step", "0.5", "--out", "missing/dir/x.csv"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn csv_output_is_byte_stable() {
    let d = TempDir::new().unwrap();
    // the second run of each pair reads the cache written by the first
    for (name, extra) in [("a", "--cache-dir=cache"), ("b", "--cache-dir=cache"), ("c", "--seed=0")] {
        let out = format!("{name}.csv");
        let o = run_in(d.path(), &[extra, "table", "--k", "4", "--from", "-3", "--to", "1", "--step", "0.25", "--out", &out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fs::read(d.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b.csv")).unwrap());
    assert_eq!(a, fs::read(d.path().join("c.csv")).unwrap());

    for name in ["g1.csv", "g2.csv"] {
        let o = run_in(d.path(), &["phi", "--grid", "-1,1,-1,1,9", "--out", name]);
        assert_eq!(code(&o), 0);
    }
    let g = fs::read(d.path().join("g1.csv")).unwrap();
    assert_eq!(g, fs::read(d.path().join("g2.csv")).unwrap());
    assert_eq!(String::from_utf8(g).unwrap().lines().count(), 82);
}

#[test]
fn cache_is_versioned_and_invalidated() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["--cache-dir", "cache", "eval", "--k", "3", "--t", "0"]);
    assert_eq!(code(&o), 0);
    let read = || -> Value { serde_json::from_str(&fs::read_to_string(d.path().join("cache/levels.json")).unwrap()).unwrap() };
    let v = read();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["levels"].as_array().unwrap().len(), 3);
    assert!((v["levels"][2]["omega"].as_f64().unwrap() - 0.332625181945494).abs() < 1e-9);

    let o = run_in(d.path(), &["--cache-dir", "cache", "--tolerance", "1e-11", "eval", "--k", "2", "--t", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read()["tolerance"].as_f64().unwrap(), 1e-11);
    let o = run_in(d.path(), &["--cache-dir", "cache", "--tolerance", "1e-11", "--depth-cap", "300", "eval", "--k", "2", "--t", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read()["depth_cap"], 300);

    fs::write(d.path().join("cache/levels.json"), "not json").unwrap();
    let o = run_in(d.path(), &["--cache-dir", "cache", "eval", "--k", "2", "--t", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "1.0");

    let o = Command::new(env!("CARGO_BIN_EXE_hyperop"))
        .args(["eval", "--k", "2", "--t", "0"])
        .current_dir(d.path())
        .env("HYPEROP_CACHE_DIR", "from_env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(d.path().join("from_env/levels.json").exists());
}

#[test]
fn phi_points_derivative_and_check() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["phi", "--re", "1", "--im", "0"]);
    assert_eq!(code(&o), 0);
    assert!((first_number(&o) - phi_oracle(1.0)).abs() < 1e-12);
    assert!((first_number(&o) - 1.5283).abs() < 1e-3);

    let plain = first_number(&run_in(d.path(), &["phi", "--re", "0", "--im", "0"]));
    let o = run_in(d.path(), &["phi", "--re", "0", "--im", "0", "--deriv", "0"]);
    assert_eq!(code(&o), 0);
    assert!((first_number(&o) - plain).abs() < 1e-12);

    let o = run_in(d.path(), &["phi", "--re", "0.5", "--im", "1", "--check"]);
    assert_eq!(code(&o), 0);
    let r: f64 = stdout(&o).lines().find_map(|l| l.strip_prefix("residual: ")).unwrap().parse().unwrap();
    assert!(r < 1e-10);

    let o = run_in(d.path(), &["phi", "--grid", "0,1,0,1,1001"]);
    assert_eq!(code(&o), 2);
    let o = run_in(d.path(), &["phi", "--grid", "0,1,0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_level_one_runs_only_trivial_checks() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["--max-level", "1", "--format", "json", "verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ids: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["check_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["jet.finite_difference", "jet.log_exp_inverse", "jet.order_zero_projection", "tower.bijectivity", "tower.ladder"]);
}

#[test]
fn verify_default_run_passes_and_writes_report() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["verify", "--report", "report.json"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(d.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 21);
    for c in checks {
        for field in ["check_id", "passed", "max_residual", "threshold", "grid"] {
            assert!(c.get(field).is_some(), "missing {field}");
        }
    }
    assert!(!v["probes"]["contraction"].as_array().unwrap().is_empty());
}
