use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
seed = 3

[regime]
d = 1
p = 2.0
alpha = 2.0

[grid]
dim = 1
n = 1024
half_length = 80.0

[nonlinearity]
kind = "pure_power"
eta = [1.0, 0.0]
p = 2.0

[initial_data]
kind = "gaussian"
a = 0.5
amplitude = 0.05

[step]
dt = 0.02
t_end = 8.0
snapshot_stride = 25

[sweep]
R = [3.0, 4.0, 6.0]
horizon_cap = 8.0

[sweep.r0]
policy = "fixed"
r0 = 1.0
"#;

fn nlslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlslab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn repo(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path
}

#[test]
fn exponents_critical_case() {
    let text = stdout(&nlslab(&["exponents", "--d", "3", "--p", "2"]));
    assert!(text.lines().any(|l| l == "p_st = 2"), "{text}");
    assert!(text.lines().any(|l| l == "gap = 0"), "{text}");

    let json: Value = serde_json::from_str(&stdout(&nlslab(&[
        "--json",
        "exponents",
        "--d",
        "3",
        "--p",
        "2",
    ])))
    .unwrap();
    assert_eq!(json["p_strauss"], 2.0);
    assert_eq!(json["theorem_gap"], 0.0);
}

#[test]
fn exponents_table() {
    let text = stdout(&nlslab(&["exponents", "--d", "2", "--table"]));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("d,p,p_strauss"));
    assert_eq!(lines.len(), 41);
    let text = stdout(&nlslab(&[
        "exponents",
        "--d",
        "2",
        "--table",
        "--p",
        "1.5,2.5",
    ]));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn exponents_rejects_bad_regime() {
    let out = nlslab(&["exponents", "--d", "1", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn psi_constants_per_radius() {
    let text = stdout(&nlslab(&[
        "lemma-check",
        "--which",
        "psi",
        "--R",
        "8,16,32",
    ]));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .take(3)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![8.0, 16.0, 32.0]
    );
    for r in &rows {
        assert_eq!(r.len(), 3);
        assert!(r[1].is_finite() && r[1] > 0.0 && r[2].is_finite() && r[2] > 0.0);
        assert!((r[1] - rows[0][1]).abs() < 1e-6 * rows[0][1]);
    }
}

#[test]
fn lemma2_from_config_data() {
    let json: Value = serde_json::from_str(&stdout(&nlslab(&[
        "--json",
        "--config",
        &repo("configs/ikeda_inui.toml"),
        "lemma-check",
        "--which",
        "lemma2",
        "--R",
        "4,8,16",
    ])))
    .unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["data_term"].as_f64().unwrap() > 0.0));
}

#[test]
fn verify_nl_flags_and_config() {
    let json: Value = serde_json::from_str(&stdout(&nlslab(&[
        "--json",
        "verify-nl",
        "--kind",
        "pure-power",
        "--p",
        "3",
        "--eta",
        "1,0.5",
    ])))
    .unwrap();
    assert!(json["a2"]["c0"].as_f64().unwrap() > 0.0);
    assert!(json["reconstruction_error"].as_f64().unwrap() < 1e-10);

    let json: Value = serde_json::from_str(&stdout(&nlslab(&[
        "--json",
        "--config",
        &repo("configs/gauge_p3.toml"),
        "verify-nl",
    ])))
    .unwrap();
    assert!(json["a2"]["error"].is_string());
    assert!(json["ell1_margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn config_errors_exit_two_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, SMALL.replace("n = 1024", "n = 1000")).unwrap();
    let out = nlslab(&["--config", path.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n"));

    let out = nlslab(&["simulate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn isweep_persists_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let text = stdout(&nlslab(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "isweep",
    ]));
    assert!(text.contains("I(R) slope"));
    stdout(&nlslab(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--threads",
        "1",
        "isweep",
    ]));
    for f in [
        "manifest.json",
        "sweep.csv",
        "residuals.csv",
        "fields/manifest.json",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let sweep = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
}

#[test]
fn seed_override_reaches_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("o");
    stdout(&nlslab(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "99",
        "simulate",
    ]));
    let manifest: Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 99);
    assert!(!out.join("sweep.csv").exists());
}

#[test]
fn scatter_diag_reports_trend() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let json: Value = serde_json::from_str(&stdout(&nlslab(&[
        "--json",
        "--config",
        config.to_str().unwrap(),
        "scatter-diag",
    ])))
    .unwrap();
    assert!(!json["cauchy"].as_array().unwrap().is_empty());
    assert!(json["cauchy_trend"].is_string());
}

#[test]
fn guard_abort_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blow.toml");
    let text = SMALL
        .replace("eta = [1.0, 0.0]", "eta = [0.0, 1.0]")
        .replace("amplitude = 0.05", "amplitude = 1.0")
        .replace(
            "snapshot_stride = 25",
            "snapshot_stride = 25\nblowup_factor = 3.0",
        );
    fs::write(&path, text).unwrap();
    let out_dir = dir.path().join("o");
    let out = nlslab(&[
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "simulate",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("aborted"));
    assert!(out_dir.join("manifest.json").exists());
}
