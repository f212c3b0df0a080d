//! End-to-end tests of the `wavepacket` binary on a scaled-down scenario
//! (q = 30 um, fast shape frequencies, 128x128 grid) that runs in seconds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavepacket"))
}

fn mini_config(dir: &Path, v0_ev: f64, mode: &str) -> PathBuf {
    let path = dir.join("mini.toml");
    let text = format!(
        r#"mode = "{mode}"

[units]
v0 = "ev"
omega = "per_ms"

[packet]
q_um = 30.0
v_um_per_ms = 4.0
omega1 = 0.25
omega2 = 0.15
mass_u = 7.016003

[ridge]
v0 = {v0_ev:e}
ell_um = 3.0

[grid]
n1 = 128
n2 = 128
x1_min_um = -90.0
x1_max_um = 90.0
x2_min_um = -75.0
x2_max_um = 75.0

[timing]
dt_ms = 0.05
output_stride = 20
"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn wavepacket");
    assert!(
        output.status.success(),
        "command failed (status {:?}):\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

#[test]
fn predict_reports_matching_routes() {
    let dir = TempDir::new().unwrap();
    let config = mini_config(dir.path(), 1e-14, "predict");
    let output = run_ok(bin().arg("predict").arg("--config").arg(&config));
    let report: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("prediction JSON");
    assert_eq!(report["grid_invoked"], serde_json::json!(false));
    assert_eq!(report["blocks"], serde_json::json!("analytic"));
    let closed = report["delta_mam_hbar"]["closed_form"].as_f64().unwrap();
    let generic = report["delta_mam_hbar"]["generic"][2].as_f64().unwrap();
    // closed form: q V0 (omega1 - omega2) / (mu v^3)
    let expected = 30.0 * 1e-14 * 9.64853321566533e13 * 0.1 / (7.016003 * 64.0);
    assert!((closed - expected).abs() < 1e-12 * expected.abs());
    assert!((generic - closed).abs() < 1e-10 * closed.abs());
}

#[test]
fn predict_fd_blocks_agree_with_closed_form() {
    let dir = TempDir::new().unwrap();
    let config = mini_config(dir.path(), 1e-14, "predict");
    let output =
        run_ok(bin().arg("predict").arg("--config").arg(&config).arg("--no-analytic-blocks"));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["blocks"], serde_json::json!("finite-difference"));
    let closed = report["delta_mam_hbar"]["closed_form"].as_f64().unwrap();
    let generic = report["delta_mam_hbar"]["generic"][2].as_f64().unwrap();
    assert!(
        (generic - closed).abs() < 1e-4 * closed.abs(),
        "fd {generic:e} vs closed {closed:e}"
    );
}

#[test]
fn simulate_is_deterministic_and_zero_ridge_is_flat() {
    let dir = TempDir::new().unwrap();
    let config = mini_config(dir.path(), 0.0, "simulate");
    let out1 = dir.path().join("run1.csv");
    let out2 = dir.path().join("run2.csv");
    run_ok(bin().arg("simulate").arg("--config").arg(&config).arg("--out").arg(&out1));
    run_ok(bin().arg("simulate").arg("--config").arg(&config).arg("--out").arg(&out2));
    let text1 = std::fs::read_to_string(&out1).unwrap();
    let text2 = std::fs::read_to_string(&out2).unwrap();
    assert_eq!(text1, text2, "identical configs must produce byte-identical CSV");

    let mut lines = text1.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_ms,norm,x1_um,x2_um,v1,v2,mam_total_hbar,mam_internal_hbar"
    );
    let mut rows = 0;
    for line in lines {
        let fields: Vec<f64> =
            line.split(',').map(|f| f.parse().expect("numeric field")).collect();
        assert_eq!(fields.len(), 8);
        let norm = fields[1];
        let mam_internal = fields[7];
        assert!((norm - 1.0).abs() < 1e-8, "norm drifted: {norm}");
        assert!(mam_internal.abs() <= 1e-5, "V0 = 0 but internal MAM = {mam_internal:e}");
        rows += 1;
    }
    // 15 ms at dt = 0.05 with stride 20 -> initial sample + 15 more
    assert_eq!(rows, 16);
}

#[test]
fn simulate_mode_both_writes_prediction() {
    let dir = TempDir::new().unwrap();
    let config = mini_config(dir.path(), 1e-14, "both");
    let out = dir.path().join("series.csv");
    run_ok(bin().arg("simulate").arg("--config").arg(&config).arg("--out").arg(&out));
    let prediction = dir.path().join("series.predict.json");
    assert!(prediction.exists(), "mode = both should write a prediction file");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&prediction).unwrap()).unwrap();
    assert!(report["delta_mam_hbar"]["closed_form"].is_f64());
}

#[test]
fn sweep_writes_ordered_rows_with_linear_prediction() {
    let dir = TempDir::new().unwrap();
    let config = mini_config(dir.path(), 1e-14, "simulate");
    let out = dir.path().join("sweep.csv");
    run_ok(
        bin()
            .arg("sweep")
            .arg("--config")
            .arg(&config)
            .arg("--v0-list")
            .arg("0,5e-15,1e-14")
            .arg("--threads")
            .arg("1")
            .arg("--out")
            .arg(&out),
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "V0_eV,mam_numeric_hbar,mam_predicted_hbar,rel_error");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // rows in input order
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[1][0] - 5e-15).abs() < 1e-28);
    assert!((rows[2][0] - 1e-14).abs() < 1e-28);
    // V0 = 0: both columns vanish
    assert!(rows[0][1].abs() < 1e-5 && rows[0][2].abs() < 1e-5);
    // predicted column linear in V0 (up to the 9-significant-digit CSV
    // rounding)
    assert!((rows[2][2] - 2.0 * rows[1][2]).abs() < 1e-7 * rows[2][2].abs());
}

#[test]
fn compare_produces_report() {
    let dir = TempDir::new().unwrap();
    let config = mini_config(dir.path(), 1e-14, "predict");
    let series = dir.path().join("series.csv");
    let prediction = dir.path().join("prediction.json");
    let sim_config = mini_config(dir.path(), 1e-14, "simulate");
    run_ok(bin().arg("simulate").arg("--config").arg(&sim_config).arg("--out").arg(&series));
    run_ok(bin().arg("predict").arg("--config").arg(&config).arg("--out").arg(&prediction));
    let report_path = dir.path().join("report.json");
    let output = run_ok(
        bin().arg("compare").arg(&series).arg(&prediction).arg("--out").arg(&report_path),
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("relative error"), "human-readable summary expected: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report["rel_error"].as_f64().unwrap().is_finite());
    assert!(report["plateau_mam_numeric_hbar"].as_f64().is_some());
    assert!(report["run_metadata"]["series_rows"].as_u64().unwrap() > 0);
}

#[test]
fn compare_zero_run_against_zero_prediction() {
    let dir = TempDir::new().unwrap();
    let sim_config = mini_config(dir.path(), 0.0, "simulate");
    let series = dir.path().join("series.csv");
    let prediction = dir.path().join("prediction.json");
    run_ok(bin().arg("simulate").arg("--config").arg(&sim_config).arg("--out").arg(&series));
    run_ok(bin().arg("predict").arg("--config").arg(&sim_config).arg("--out").arg(&prediction));
    let report_path = dir.path().join("report.json");
    run_ok(bin().arg("compare").arg(&series).arg(&prediction).arg("--out").arg(&report_path));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    // both sides ~0; the 1e-6 hbar floor keeps the ratio near zero
    assert!(report["rel_error"].as_f64().unwrap() < 0.05);
}

#[test]
fn bad_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[packet]\nq_um = 30.0\nunknown_key = 1\n").unwrap();
    let output = bin().arg("predict").arg("--config").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invalid_grid_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = mini_config(dir.path(), 1e-14, "simulate");
    let text = std::fs::read_to_string(&config).unwrap().replace("n1 = 128", "n1 = 100");
    std::fs::write(&config, text).unwrap();
    let output = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("power of two"), "diagnostic expected, got: {stderr}");
}

#[test]
fn compare_missing_column_names_it() {
    let dir = TempDir::new().unwrap();
    let series = dir.path().join("series.csv");
    std::fs::write(&series, "t_ms,norm,mam_internal\n0.0,1.0,0.0\n").unwrap();
    let prediction = dir.path().join("prediction.json");
    std::fs::write(
        &prediction,
        r#"{"delta_mam_hbar": {"closed_form": 1e-3, "generic": [0, 0, 1e-3]}}"#,
    )
    .unwrap();
    let output = bin().arg("compare").arg(&series).arg(&prediction).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("mam_internal_hbar"),
        "error must name the missing column, got: {stderr}"
    );
}
