//! End-to-end runs of the `betachain` binary: exit codes, manifests,
//! determinism and the shipped configurations.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_betachain");

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(command: &str, config: &Path, seed: u64, out: &Path) -> i32 {
    let status = Command::new(BIN)
        .args([command, "--config"])
        .arg(config)
        .args(["--seed", &seed.to_string(), "--out"])
        .arg(out)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn command_of(config: &Path) -> String {
    let text = std::fs::read_to_string(config).unwrap();
    let value: toml::Table = text.parse().unwrap();
    value["command"].as_str().unwrap().to_string()
}

const SIMULATE: &str = r#"command = "simulate"
n_steps = 0

[chain]
x0 = 0.25

[chain.p]
kind = "polynomial"
coefficients = [0.0, 1.0]

[chain.left]
kind = "beta_one_z"
z = 2.0

[chain.right]
kind = "beta_one_z"
z = 2.0
"#;

fn simulate_config(n_steps: usize) -> String {
    SIMULATE.replace("n_steps = 0", &format!("n_steps = {n_steps}"))
}

#[test]
fn every_shipped_config_runs_quickly_and_reproducibly() {
    let tmp = TempDir::new().unwrap();
    let mut configs: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    configs.sort();
    for config in configs {
        let name = config.file_stem().unwrap().to_string_lossy().to_string();
        let command = command_of(&config);
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        let start = Instant::now();
        assert_eq!(run(&command, &config, 11, &a), 0, "{name}");
        assert!(start.elapsed() < Duration::from_secs(60), "{name} took {:?}", start.elapsed());
        assert_eq!(run(&command, &config, 11, &b), 0, "{name}");
        let m = manifest(&a);
        assert_eq!(m["status"], "ok");
        assert_eq!(m["seed"], 11);
        assert_eq!(m["config"]["command"], command.as_str());
        let mut files = vec!["manifest.json".to_string()];
        files.extend(m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()));
        for f in files {
            let (x, y) = (std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap());
            assert!(x == y, "{name}/{f} differs between identical runs");
        }
    }
}

#[test]
fn different_seeds_give_different_paths() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, "sim.toml", &simulate_config(100));
    assert_eq!(run("simulate", &config, 1, &tmp.path().join("a")), 0);
    assert_eq!(run("simulate", &config, 2, &tmp.path().join("b")), 0);
    let a = std::fs::read(tmp.path().join("a/trajectory.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/trajectory.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn zero_step_simulation_is_the_start_row() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, "sim.toml", &simulate_config(0));
    let out = tmp.path().join("out");
    assert_eq!(run("simulate", &config, 0, &out), 0);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "step,x");
    assert!(lines[1].starts_with("0,2.5"), "{}", lines[1]);
}

#[test]
fn uniform_density_column() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        &tmp,
        "d.toml",
        "command = \"density\"\nl = 1.0\nr = 1.0\ngrid_points = 11\n[p]\nkind = \"linear\"\nb = 1.0\nc = 1.0\n",
    );
    let out = tmp.path().join("out");
    assert_eq!(run("density", &config, 0, &out), 0);
    let csv = std::fs::read_to_string(out.join("density.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let pi: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((pi - 1.0).abs() < 1e-12, "{row}");
    }
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(out.join("density.json")).unwrap()).unwrap();
    assert_eq!(meta["form"], "polynomial");
}

#[test]
fn peaked_density_shape() {
    let tmp = TempDir::new().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("peaked_density.toml"))
        .unwrap()
        .replace("l = 5.0\nr = 5.0", "l = 2.0\nr = 2.0");
    let config = write_config(&tmp, "d.toml", &text);
    let out = tmp.path().join("out");
    assert_eq!(run("density", &config, 0, &out), 0);
    let csv = std::fs::read_to_string(out.join("density.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    let (x_max, _) = rows.iter().copied().fold((0.0, 0.0), |b, r| if r.1 > b.1 { r } else { b });
    assert!((x_max - 0.5).abs() < 1e-3);
    // C x / (1 - x) on the left and C (1 - x) / x on the right, where
    // 2 C ∫_0^{1/2} x / (1 - x) dx = 1
    let c = 1.0 / (2.0 * (std::f64::consts::LN_2 - 0.5));
    for &(x, pi) in &rows {
        let expected = if x < 0.5 { c * x / (1.0 - x) } else { c * (1.0 - x) / x };
        assert!((pi - expected).abs() < 1e-9 * expected.max(1.0), "x = {x}: {pi} vs {expected}");
    }
}

#[test]
fn absorbing_direction_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        &tmp,
        "d.toml",
        "command = \"density\"\nl = 2.0\nr = 2.0\n[p]\nkind = \"constant\"\np = 1.0\n",
    );
    let out = tmp.path().join("out");
    assert_eq!(run("density", &config, 0, &out), 2);
    let m = manifest(&out);
    assert_eq!(m["status"], "config_error");
    assert_eq!(m["exit_code"], 2);
    assert!(m["message"].as_str().unwrap().contains("ergodicity"));
}

#[test]
fn malformed_configs_exit_with_2() {
    let tmp = TempDir::new().unwrap();
    let unknown = write_config(&tmp, "u.toml", &simulate_config(5).replace("n_steps = 5", "n_steps = 5\nverbose = true"));
    let out = tmp.path().join("u");
    assert_eq!(run("simulate", &unknown, 0, &out), 2);
    assert!(manifest(&out)["config"].is_null());

    let good = write_config(&tmp, "g.toml", &simulate_config(5));
    assert_eq!(run("density", &good, 0, &tmp.path().join("mismatch")), 2);
    assert_eq!(run("simulate", &tmp.path().join("missing.toml"), 0, &tmp.path().join("missing")), 2);
}

#[test]
fn numeric_failure_exits_with_3() {
    let tmp = TempDir::new().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("bvp_beta22.toml"))
        .unwrap()
        .replace("eps = 1e-6", "eps = 1e-300")
        .replace("oracle_cells = 2000\n", "");
    let config = write_config(&tmp, "b.toml", &text);
    let out = tmp.path().join("out");
    assert_eq!(run("bvp", &config, 0, &out), 3);
    assert_eq!(manifest(&out)["status"], "numeric_error");
}

#[test]
fn failed_check_exits_with_4_and_keeps_the_report() {
    let tmp = TempDir::new().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("verify_identity.toml"))
        .unwrap()
        .replace("n_steps = 1000000", "n_steps = 20000")
        .replace("oracle_cells = 500\n", "");
    let config = write_config(&tmp, "v.toml", &text);
    let out = tmp.path().join("out");
    assert_eq!(run("verify", &config, 3, &out), 4);
    assert_eq!(manifest(&out)["status"], "verification_failed");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["fit"]["passed"], false);
    assert!(report["residual"]["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn written_config_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let config = configs_dir().join("search_1d.toml");
    let first = tmp.path().join("first");
    assert_eq!(run("search", &config, 5, &first), 0);
    let second = tmp.path().join("second");
    assert_eq!(run("search", &first.join("config.toml"), 5, &second), 0);
    for f in ["config.toml", "trace.csv", "search.json", "manifest.json"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
    let trace = std::fs::read_to_string(first.join("trace.csv")).unwrap();
    assert!(trace.starts_with("n,z,x_1,best_value,travel\n"));
}
