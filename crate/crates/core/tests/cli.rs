use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_bsvie");

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn bsvie(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("BSVIE_OUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_column(path: &Path, column: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(column).unwrap().parse().unwrap())
        .collect()
}

const SMALL: &str = r#""horizon": 1.0, "steps": 8, "paths": 2000, "seed": 4"#;

#[test]
fn solve_constant_claim() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{{SMALL}, "terminal": {{"tag": "constant", "c": 2.5}}}}"#));
    let o = bsvie(&["solve"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let header = fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert!(header.starts_with("t,meanY,stdY,mResidual\n"));
    for v in csv_column(&dir.path().join("solve.csv"), 1) {
        assert!((v - 2.5).abs() < 1e-12);
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("solve_report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["terminal"]["c"], 2.5);
    assert_eq!(report["results"]["solver"]["converged"], true);
}

#[test]
fn solve_linear_oracle() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"horizon": 1.0, "steps": 32, "paths": 1000, "seed": 1,
            "generator": {"tag": "linear", "l1": 0.1, "l2": 0.0},
            "terminal": {"tag": "constant", "c": 1.0}, "solver": {"tol": 1e-12}}"#,
    );
    let o = bsvie(&["solve"], &cfg, dir.path());
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("solve_report.json")).unwrap()).unwrap();
    let y0 = report["results"]["y0"]["mean"].as_f64().unwrap();
    assert!((y0 - 1.1051709180756477).abs() <= 5e-3);
}

#[test]
fn one_step_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"horizon": 1.0, "steps": 1, "paths": 2000, "seed": 4}"#);
    let o = bsvie(&["solve"], &cfg, dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));
    assert!(!dir.path().join("solve.csv").exists());
}

#[test]
fn risk_commands() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{{SMALL}, "terminal": {{"tag": "constant", "c": 5.0}}}}"#));
    let o = bsvie(&["risk"], &cfg, dir.path());
    assert_eq!(code(&o), 0);
    for v in csv_column(&dir.path().join("risk.csv"), 1) {
        assert!((v + 5.0).abs() < 1e-12);
    }

    let cfg = write_config(
        dir.path(),
        "k.json",
        r#"{"horizon": 1.0, "steps": 16, "paths": 8000, "seed": 2, "generator": {"tag": "kappa_abs_z", "kappa": 0.5}}"#,
    );
    let o = bsvie(&["risk"], &cfg, dir.path());
    assert_eq!(code(&o), 0);
    let head = csv_column(&dir.path().join("risk.csv"), 1)[0];
    assert!((head - 0.5).abs() <= 0.05, "{head}");

    let cfg = write_config(dir.path(), "bad.json", &format!(r#"{{{SMALL}, "generator": {{"tag": "cubic"}}}}"#));
    let o = bsvie(&["risk"], &cfg, dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("generator"), "{}", stderr(&o));
}

#[test]
fn axioms_findings_and_strict_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.json",
        &format!(
            r#"{{{SMALL}, "generator": {{"tag": "quadratic", "coef": 1.0}},
                "axioms": {{"past_independence": [], "monotonicity": [], "subadditivity": [], "translation": [], "homogeneity": [2.0]}}}}"#
        ),
    );
    let o = bsvie(&["axioms"], &cfg, dir.path());
    assert_eq!(code(&o), 0);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("positive_homogeneity   NO"), "{table}");
    let csv = fs::read_to_string(dir.path().join("axioms.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("positive_homogeneity,false,"));

    let o = bsvie(&["axioms", "--strict"], &cfg, dir.path());
    assert_eq!(code(&o), 4);

    let cfg = write_config(
        dir.path(),
        "empty.json",
        &format!(
            r#"{{{SMALL}, "axioms": {{"past_independence": [], "monotonicity": [], "subadditivity": [], "translation": [], "homogeneity": []}}}}"#
        ),
    );
    assert_eq!(code(&bsvie(&["axioms"], &cfg, dir.path())), 2);
}

#[test]
fn linear_axioms_pass_strict() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "l.json",
        r#"{"horizon": 1.0, "steps": 8, "paths": 4000, "seed": 8,
            "generator": {"tag": "linear", "l1": 0.1, "l2": 0.2}}"#,
    );
    let o = bsvie(&["axioms", "--strict"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn bvie_commands() {
    let dir = TempDir::new().unwrap();
    let body = |kernel: &str| format!(r#"{{"horizon": 1.0, "steps": 64, "paths": 1000, "seed": 0, "bvie": {{"kernel": {kernel}, "c": 1.0}}}}"#);
    let cfg = write_config(dir.path(), "u.json", &body(r#"{"kind": "constant", "value": 1.0}"#));
    assert_eq!(code(&bsvie(&["bvie"], &cfg, dir.path())), 0);
    let y = csv_column(&dir.path().join("bvie.csv"), 1);
    assert!((y[0] + std::f64::consts::E).abs() <= 1e-3);

    let cfg = write_config(dir.path(), "z.json", &body(r#"{"kind": "constant", "value": 0.0}"#));
    assert_eq!(code(&bsvie(&["bvie"], &cfg, dir.path())), 0);
    assert!(csv_column(&dir.path().join("bvie.csv"), 1).iter().all(|v| *v == -1.0));

    // JSON has no NaN literal, so the table is rejected while parsing.
    let cfg = write_config(
        dir.path(),
        "n.json",
        &body(r#"{"kind": "table", "times": [0.0, 1.0], "values": [[1.0, NaN], [1.0, 1.0]]}"#),
    );
    assert_eq!(code(&bsvie(&["bvie"], &cfg, dir.path())), 2);
    let cfg = write_config(
        dir.path(),
        "n2.json",
        &body(r#"{"kind": "table", "times": [0.0, 1.0], "values": [[1.0, null], [1.0, 1.0]]}"#),
    );
    let o = bsvie(&["bvie"], &cfg, dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bvie.kernel"), "{}", stderr(&o));
}

#[test]
fn counterexample_commands() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"horizon": 1.0, "steps": 16, "paths": 8000, "seed": 6, "counterexample": {"c": 1.0}}"#);
    assert_eq!(code(&bsvie(&["counterexample"], &cfg, dir.path())), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("counterexample_report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["verdict"], "non_deterministic");

    let cfg = write_config(dir.path(), "z.json", r#"{"horizon": 1.0, "steps": 16, "paths": 8000, "seed": 6, "counterexample": {"c": 0.0}}"#);
    assert_eq!(code(&bsvie(&["counterexample"], &cfg, dir.path())), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("counterexample_report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["verdict"], "deterministic");

    let cfg = write_config(dir.path(), "m.json", &format!(r#"{{{SMALL}, "counterexample": {{}}}}"#));
    let o = bsvie(&["counterexample"], &cfg, dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("counterexample"), "{}", stderr(&o));
    let cfg = write_config(dir.path(), "n.json", &format!(r#"{{{SMALL}}}"#));
    assert_eq!(code(&bsvie(&["counterexample"], &cfg, dir.path())), 2);
}

#[test]
fn convergence_ladders() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"horizon": 1.0, "steps": 32, "paths": 1000, "seed": 9,
            "generator": {"tag": "linear", "l1": 0.1, "l2": 0.0},
            "terminal": {"tag": "constant", "c": 1.0}, "solver": {"tol": 1e-12},
            "bvie": {"kernel": {"kind": "constant", "value": 1.0}, "c": 1.0},
            "convergence": {"steps": [16, 32, 64]}}"#,
    );
    assert_eq!(code(&bsvie(&["convergence"], &cfg, dir.path())), 0);
    let text = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        if row[7].is_empty() {
            continue;
        }
        let ratio: f64 = row[7].parse().unwrap();
        let range = if row[0] == "steps" { 1.7..=2.3 } else { 3.0..=5.0 };
        assert!(range.contains(&ratio), "{row:?}");
    }

    let cfg = write_config(dir.path(), "one.json", &format!(r#"{{{SMALL}, "convergence": {{"steps": [16]}}}}"#));
    let o = bsvie(&["convergence"], &cfg, dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("convergence.steps"));
}

#[test]
fn divergence_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        &format!(
            r#"{{{SMALL}, "generator": {{"tag": "linear", "l1": 40.0, "l2": 0.0}},
                "terminal": {{"tag": "constant", "c": 1.0}}, "solver": {{"beta": 0.001, "max_iter": 50}}}}"#
        ),
    );
    let o = bsvie(&["solve"], &cfg, dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("beta"));
}

#[test]
fn env_var_sets_output_directory_and_flag_wins() {
    let dir = TempDir::new().unwrap();
    let env_out = dir.path().join("from_env");
    let flag_out = dir.path().join("from_flag");
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{{SMALL}, "terminal": {{"tag": "constant", "c": 1.0}}}}"#));
    let status = Command::new(BIN)
        .args(["solve", "--config"])
        .arg(&cfg)
        .env("BSVIE_OUT_DIR", &env_out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(env_out.join("solve.csv").exists());

    let status = Command::new(BIN)
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_out)
        .env("BSVIE_OUT_DIR", &env_out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(flag_out.join("solve.csv").exists());
}

#[test]
fn reruns_and_thread_counts_give_identical_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{{SMALL}, "generator": {{"tag": "linear", "l1": 0.2, "l2": 0.2}}, "terminal": {{"tag": "call", "strike": 0.0}}}}"#),
    );
    let mut outputs = Vec::new();
    for threads in ["1", "8", "1"] {
        let out = dir.path().join(format!("t{threads}-{}", outputs.len()));
        let o = bsvie(&["solve", "--threads", threads], &cfg, &out);
        assert_eq!(code(&o), 0);
        outputs.push(fs::read(out.join("solve.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{{SMALL}}}"#));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&bsvie(&["solve", "--seed", "77"], &cfg, &a)), 0);
    assert_eq!(code(&bsvie(&["solve"], &cfg, &b)), 0);
    assert_ne!(fs::read(a.join("solve.csv")).unwrap(), fs::read(b.join("solve.csv")).unwrap());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("solve_report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 77);
}

#[test]
fn missing_config_flag_and_file() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(BIN).arg("solve").output().unwrap();
    assert_eq!(code(&o), 2);
    let o = bsvie(&["solve"], &dir.path().join("nope.json"), dir.path());
    assert_eq!(code(&o), 2);
}
