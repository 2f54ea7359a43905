use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn gangolli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gangolli"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn shipped(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn write_config(dir: &TempDir, text: &str) -> String {
    let path = dir.path().join("job.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Data rows of a CSV output, skipping `#` metadata and the column header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn malformed_config_names_the_bad_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[coefficients]\na0 = 1.0\nbogus_key = 3\n");
    let out = gangolli(&["transform", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));

    let cfg = write_config(&dir, "[tolerances]\napply = -1.0\n");
    let out = gangolli(&["apply", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerances.apply"));

    let out = gangolli(&["transform", "--config", "/nonexistent/job.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn transform_round_trip_and_constant() {
    let dir = TempDir::new().unwrap();
    let out = gangolli(&["transform", "--config", &shipped("heat.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let err: f64 = rows(&dir.path().join("transform_roundtrip.csv"))
        .iter()
        .map(|r| r[3].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(err <= 1e-10);

    let cfg = write_config(&dir, "[function]\ncoefficients = [2.5]\n");
    let out = gangolli(&["transform", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let coeffs = rows(&dir.path().join("transform_coefficients.csv"));
    let nonzero: Vec<_> = coeffs.iter().filter(|r| r[1].parse::<f64>().unwrap() != 0.0).collect();
    assert_eq!(nonzero.len(), 1);
    assert_eq!(nonzero[0][0], "0");
    assert!((nonzero[0][1].parse::<f64>().unwrap() - 2.5).abs() < 1e-14);
}

#[test]
fn symbol_table_and_invalid_measure() {
    let dir = TempDir::new().unwrap();
    let out = gangolli(&["symbol", "--config", &shipped("heat.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0));
    for r in rows(&dir.path().join("symbol.csv")) {
        let l: f64 = r[1].parse().unwrap();
        let eta: f64 = r[2].parse().unwrap();
        assert!((eta - l * (l + 1.0)).abs() <= 1e-9 * (1.0 + eta));
    }

    let out = gangolli(&["symbol", "--config", &shipped("stable_alpha2.toml")], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn apply_spherical_function_matches_symbol() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[coefficients]\na0 = 0.7\n\n[function]\nspherical = 2\n\n[grid]\nband_limit = 4\ncolatitudes = 7\n");
    let out = gangolli(&["apply", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    for r in rows(&dir.path().join("apply.csv")) {
        let s: f64 = r[0].parse().unwrap();
        let direct: f64 = r[1].parse().unwrap();
        let c = s.cos();
        let p2 = 1.5 * c * c - 0.5;
        assert!((direct + 0.7 * 6.0 * p2).abs() <= 1e-9);
    }

    let out = gangolli(&["apply", "--config", &shipped("variable.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_suites() {
    let dir = TempDir::new().unwrap();
    let run = |which: &str, cfg: &str| gangolli(&["verify", "--which", which, "--config", &shipped(cfg)], dir.path());
    assert_eq!(run("pmp", "heat_atom.toml").status.code(), Some(0));
    assert_eq!(run("pmp", "negative_killing.toml").status.code(), Some(1));
    assert_eq!(run("pmp", "indefinite.toml").status.code(), Some(1));
    assert_eq!(run("invariance", "heat.toml").status.code(), Some(0));
    assert_eq!(run("bounds", "variable.toml").status.code(), Some(0));
    assert_eq!(run("zeta", "zeta.toml").status.code(), Some(0));

    assert_eq!(run("invariance", "drift.toml").status.code(), Some(1));
    let vi = rows(&dir.path().join("invariance.csv")).into_iter().find(|r| r[0] == "VI").unwrap();
    assert_eq!(vi[2], "false");
    assert!(!vi[3].is_empty(), "witness recorded");

    let cfg = write_config(&dir, "[verify]\nzeta_s = 0.5\n");
    let out = gangolli(&["verify", "--which", "zeta", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_is_byte_identical_across_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = shipped("simulate_small.toml");
    let one = gangolli(&["simulate", "--config", &cfg, "--threads", "1"], a.path());
    let four = gangolli(&["simulate", "--config", &cfg, "--threads", "4"], b.path());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(four.status.code(), Some(0));
    for name in ["endpoints_t0.05.csv", "endpoints_t0.2.csv", "lk.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
        assert!(String::from_utf8_lossy(&x).contains("# config-sha256: "));
    }

    // a different seed changes the endpoints
    let c = TempDir::new().unwrap();
    gangolli(&["simulate", "--config", &cfg, "--seed", "99"], c.path());
    assert_ne!(
        std::fs::read(a.path().join("endpoints_t0.2.csv")).unwrap(),
        std::fs::read(c.path().join("endpoints_t0.2.csv")).unwrap()
    );
}

#[test]
fn frozen_process_ends_at_the_pole() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[coefficients]\na0 = 0.0\n\n[simulate]\ntimes = [0.5]\ndt = 1e-2\npaths = 150\n");
    let out = gangolli(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let points = rows(&dir.path().join("endpoints_t0.5.csv"));
    assert_eq!(points.len(), 150);
    assert!(points.iter().all(|r| r[1] == "0" && r[2] == "0" && r[3] == "1"));

    let cfg = write_config(&dir, "[coefficients]\na0 = 0.5\na1 = 0.1\n\n[simulate]\ntimes = [0.5]\ndt = 1e-2\npaths = 150\n");
    let out = gangolli(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
