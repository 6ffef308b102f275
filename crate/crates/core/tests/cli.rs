use std::path::Path;
use std::process::{Command, Output};

fn exactrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exactrep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, claim: &str, checks: &str) -> String {
    let text = format!(
        r#"{{
  "id": "cli",
  "system": {{"state_matrix": [[0.0]], "input_matrix": [[1.0]], "initial_state": [0.0], "horizon": 1.0}},
  "weight": {{"form": "pure-power", "alpha": 0.75, "c": 1.0}},
  "gmatrix": {{"entries": [[1.0]]}},
  "claim": {claim},
  "sim": {{"paths": 200, "grid_n": 128, "gamma": 2.0, "seed": 3, "workers": 1}},
  "outputs": {{"directory": "{}", "formats": ["csv", "summary"]}},
  "checks": {checks}
}}"#,
        dir.join("out").display()
    );
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn presets_lists_every_name() {
    let o = exactrep(&["presets"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for name in exactrep::experiments::PRESET_NAMES {
        assert!(s.contains(name));
    }
}

#[test]
fn deterministic_claim_reports_exact_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"variant": "linear-terminal", "coeff": [[0.0]], "offset": [0.0]}"#,
        r#"{"max_mean_gap_sq": 0.0, "cost_se_multiple": 0.0}"#,
    );
    let o = exactrep(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    for name in ["mean_gap_sq", "mean_cost", "closed_form_cost"] {
        assert_eq!(col(name).parse::<f64>().unwrap(), 0.0, "{name}");
    }
    assert!(std::fs::read_to_string(dir.path().join("out/summary.txt"))
        .unwrap()
        .contains("all configured checks passed"));
}

#[test]
fn violated_threshold_gives_exit_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"variant": "linear-terminal", "coeff": [[1.0]], "offset": [0.0]}"#,
        r#"{"max_mean_gap_sq": 0.0}"#,
    );
    let o = exactrep(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("exceeds"));
}

#[test]
fn invalid_config_gives_exit_status_two_with_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"variant": "linear-terminal", "coeff": [[1.0]], "offset": [0.0]}"#,
        "{}",
    );
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("0.75", "0.4")
        .replace(r#""paths": 200"#, r#""paths": 1"#);
    std::fs::write(&cfg, text).unwrap();
    let o = exactrep(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("(0.5, 1)") && err.contains("paths"), "{err}");
}

#[test]
fn flags_override_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = exactrep(&[
        "run",
        "--preset",
        "scalar-w",
        "--paths",
        "300",
        "--grid-n",
        "64",
        "--gamma",
        "1.5",
        "--seed",
        "9",
        "--workers",
        "2",
        "--out",
        &out,
    ]);
    assert!(o.status.code().is_some());
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("scalar-w,64,1.5000000000000000e0,300,9,"), "{row}");
}

#[test]
fn converge_emits_one_row_per_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = exactrep(&[
        "converge",
        "--preset",
        "scalar-w",
        "--paths",
        "500",
        "--n-list",
        "64,128,256",
        "--out",
        &out,
    ]);
    assert!(o.status.code().is_some());
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let o = exactrep(&[
        "converge", "--preset", "scalar-w", "--paths", "500", "--n-list", "128,64", "--out", &out,
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pde_check_writes_error_table_and_refuses_tabulated_payoffs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = exactrep(&[
        "pde-check",
        "--preset",
        "markov-cos",
        "--resolutions",
        "60x40,120x80",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("pde_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let claim = r#"{"variant": "markov-terminal1d",
        "payoff": {"kind": "tabulated", "xs": [-1.0, 0.0, 1.0], "values": [1.0, 0.0, 1.0]},
        "diffusion": {"drift": {"kind": "constant", "value": 0.0}, "vol": {"kind": "constant", "value": 1.0},
                      "y0": 0.0, "ellipticity_floor": 0.1},
        "solver": {"kind": "finite-difference", "space_nodes": 51, "time_steps": 20, "gamma": 1.0}}"#;
    let cfg = write_config(dir.path(), claim, "{}");
    let o = exactrep(&["pde-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Monte Carlo"));
}

#[test]
fn cost_table_covers_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = exactrep(&["cost-table", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("cost_table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let w2 = csv.lines().find(|l| l.starts_with("scalar-w2,")).unwrap();
    let total: f64 = w2.split(',').nth(3).unwrap().parse().unwrap();
    assert!((total - 85.0 / 84.0).abs() < 1e-6);
}
