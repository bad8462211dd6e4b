use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tdm_core::report::RunReport;

fn tdm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdm")).args(args).current_dir(dir).env_remove("TDM_TOLERANCE").output().unwrap()
}

fn report(out: &Output) -> RunReport {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_json(dir: &Path, name: &str, rows: Vec<Vec<f64>>) {
    let text = serde_json::json!({"d": rows.len(), "entries": rows}).to_string();
    std::fs::write(dir.join(name), text).unwrap();
}

fn ones(d: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0; d]; d]
}

#[test]
fn comonotone_j40_via_colgen() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "j40.json", ones(40));
    let out = tdm(&["check", "j40.json", "--method", "colgen", "--brief"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &report(&out).results[0];
    assert_eq!(r["member"], Value::Bool(true));
    assert_eq!(r["path"], "colgen");
    assert!(r["colgen"]["distance"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn auto_reports_the_path_taken() {
    let dir = tempfile::tempdir().unwrap();
    let equi: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 0.5 } else { 1.0 / 6.0 }).collect()).collect();
    write_json(dir.path(), "equi.json", equi);
    std::fs::write(dir.path().join("generic.csv"), "1,0.2,0.3\n0.2,1,0.4\n0.3,0.4,1\n").unwrap();
    let out = tdm(&["check", "equi.json", "--mode", "bcm"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out).results[0];
    assert_eq!((r["path"].as_str(), r["member"].as_bool()), (Some("parametric"), Some(true)));
    assert_eq!(r["pattern"]["family"], "equi");

    let out = tdm(&["check", "generic.csv"], dir.path());
    assert_eq!(report(&out).results[0]["path"], "full");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "ok.json", ones(3));
    std::fs::write(dir.path().join("bad.csv"), "1,2\n2,1\n").unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\"d\": 2, \"entries\": [[1, 0]").unwrap();
    assert_eq!(tdm(&["check", "ok.json"], dir.path()).status.code(), Some(0));
    let out = tdm(&["check", "ok.json", "bad.csv", "broken.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r.results[0]["status"], "decided");
    assert_eq!(r.results[1]["status"], "error");
    assert!(r.results[2]["error"].as_str().unwrap().contains("line 1"));

    // Relaxed-only pricing above the exact cap cannot prove non-membership.
    let d = 30;
    let m: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else if (i as i64 - j as i64).abs() == 1 { 0.9 } else { 0.0 }).collect())
        .collect();
    write_json(dir.path(), "hard.json", m);
    let out = tdm(&["check", "hard.json", "--method", "colgen", "--pricing", "relaxed", "--brief"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &report(&out).results[0];
    assert_eq!(r["status"], "undecided");
    assert!(r["member"].is_null());
    let (lo, hi) = (r["colgen"]["lower_bound"].as_f64().unwrap(), r["colgen"]["distance"].as_f64().unwrap());
    assert!(lo <= hi + 1e-12);
}

#[test]
fn reports_are_reproducible_and_job_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let gen = tdm(&["gen", "class5", "--d", "7", "--count", "6", "--seed", "11", "--out-dir", "m"], dir.path());
    assert_eq!(gen.status.code(), Some(0));
    let g = report(&gen);
    assert_eq!(g.results.len(), 6);
    assert!(g.results.iter().all(|r| r["verdict"]["status"] == "decided" || r["verdict"]["status"] == "invalid"));
    let files: Vec<String> = g.results.iter().map(|r| r["file"].as_str().unwrap().to_string()).collect();

    let mut args = vec!["check", "--mode", "bcm"];
    args.extend(files.iter().map(String::as_str));
    let a = report(&tdm(&args, dir.path()));
    let b = report(&tdm(&args, dir.path()));
    assert_eq!(a.without_timing(), b.without_timing());
    args.extend(["--jobs", "3"]);
    let c = report(&tdm(&args, dir.path()));
    assert_eq!(a.results, c.results);
    assert_eq!(a.config_hash, c.config_hash);

    // Generated instances are labelled consistently with a later check.
    for (gr, cr) in g.results.iter().zip(&a.results) {
        if gr["verdict"]["status"] == "decided" {
            assert_eq!(gr["verdict"]["member"], cr["member"]);
        }
    }
}

#[test]
fn tolerance_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tau: &str| {
        Command::new(env!("CARGO_BIN_EXE_tdm"))
            .args(["parametric", "equi", "--alpha", "0.5", "--d", "4"])
            .current_dir(dir.path())
            .env("TDM_TOLERANCE", tau)
            .output()
            .unwrap()
    };
    let out = run("1e-6");
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.tolerance, 1e-6);
    assert_ne!(r.config_hash, report(&tdm(&["parametric", "equi", "--alpha", "0.5", "--d", "4"], dir.path())).config_hash);
    assert_eq!(run("-3").status.code(), Some(1));
}

#[test]
fn parametric_and_simulation_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = tdm(&["parametric", "two-sector", "--d1", "3", "--d2", "3", "--grid", "6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha,beta,gamma_upper");
    assert_eq!(lines.len(), 1 + 49);

    let out = tdm(&["parametric", "two-sector", "--d1", "2", "--d2", "2", "--grid", "2", "--out", "g.csv"], dir.path());
    assert_eq!(report(&out).results[0]["rows"], 9);
    assert!(dir.path().join("g.csv").exists());

    let out = tdm(&["parametric", "toeplitz", "--phi", "0.5", "--d", "5", "--witness"], dir.path());
    let r = &report(&out).results[0];
    assert_eq!(r["member"], Value::Bool(true));
    assert!(!r["witness"].as_array().unwrap().is_empty());

    let out = tdm(&["simulate", "movmax", "--a", "1/3", "--b", "1/3", "--c", "1/3", "--n", "200000", "--d", "4", "--out", "s.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out).results[0];
    let tdc = r["tdc"].as_array().unwrap();
    assert_eq!(tdc.len(), 3);
    for lag in tdc {
        let (est, theory) = (lag["estimate"].as_f64().unwrap(), lag["theory"].as_f64().unwrap());
        assert!((est - theory).abs() < 0.08, "{lag}");
    }
    let rows = std::fs::read_to_string(dir.path().join("s.csv")).unwrap().lines().count();
    assert_eq!(rows, 200_001);
}
