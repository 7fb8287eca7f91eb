use std::path::Path;
use std::process::{Command, Output};

fn qbat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbat"))
        .args(args)
        .current_dir(dir)
        .env_remove("QBAT_THREADS")
        .output()
        .expect("spawn qbat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn discharge_peak_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["discharge", "--bell", "10"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("t_J,charge_over_E0,ec_hbar_omega_J,"));
    let t = column(&csv, "t_J");
    let c = column(&csv, "charge_over_E0");
    let (k, peak) = c.iter().copied().enumerate().fold((0, f64::MIN), |m, x| if x.1 > m.1 { x } else { m });
    assert!((peak - 1.0).abs() < 1e-12);
    let td = std::f64::consts::PI / (4.0 * 2f64.sqrt());
    assert!((t[k] - td).abs() < 1e-12 && (t[k] - 0.5554).abs() < 1e-4);
}

#[test]
fn singlet_does_not_discharge() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["discharge", "--bell", "11", "--samples", "65"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(column(&csv, "charge_over_E0").iter().all(|c| c.abs() < 1e-14));
    assert!(column(&csv, "ec_hbar_omega_J").iter().all(|p| p.abs() < 1e-14));
}

#[test]
fn gates_unlock_the_singlet() {
    let dir = tempfile::tempdir().unwrap();
    for (gate, qubit, expect) in [("full", "1", 1.0), ("full", "2", 1.0), ("half", "2", 0.5)] {
        let o = qbat(dir.path(), &["discharge", "--bell", "11", "--gate", gate, "--qubit", qubit]);
        assert!(o.status.success());
        let peak = column(&stdout(&o), "charge_over_E0").into_iter().fold(f64::MIN, f64::max);
        assert!((peak - expect).abs() < 1e-12, "{gate} {qubit}: {peak}");
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for fmt in ["csv", "json"] {
        let a = qbat(dir.path(), &["trap-scan", "--samples", "300", "--format", fmt, "--output", "a.out"]);
        let b = qbat(dir.path(), &["trap-scan", "--samples", "300", "--format", fmt, "--output", "b.out"]);
        assert!(a.status.success() && b.status.success());
        let a = std::fs::read(dir.path().join("a.out")).unwrap();
        let b = std::fs::read(dir.path().join("b.out")).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = stdout(&qbat(dir.path(), &["single-particle", "--samples", "17"]));
    let json = stdout(&qbat(dir.path(), &["single-particle", "--samples", "17", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["command"], "single-particle");
    let rows = v["rows"].as_array().unwrap();
    let c = column(&csv, "charge_over_E0");
    assert_eq!(rows.len(), c.len());
    for (r, x) in rows.iter().zip(&c) {
        assert_eq!(r["charge_over_E0"].as_f64().unwrap(), *x);
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("qbat.json"), r#"{"omega": 2.0, "j_coupling": 0.5, "format": "json"}"#).unwrap();
    let o = qbat(dir.path(), &["trap-check", "--bell", "11"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["omega"], 2.0);
    assert_eq!(v["j_coupling"], 0.5);
    assert_eq!(v["rows"][0]["trapped"], true);

    let o = qbat(dir.path(), &["trap-check", "--omega", "3", "--format", "csv"]);
    assert!(stdout(&o).starts_with("bell,"));

    std::fs::write(dir.path().join("other.json"), r#"{"omega": 1.0, "temperature": 3}"#).unwrap();
    let o = qbat(dir.path(), &["trap-check", "--config", "other.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qbat(dir.path(), &["trap-check", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["discharge", "--bell", "10", "--omega", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega"));
    let o = qbat(dir.path(), &["discharge", "--bell", "10", "--j", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("j_coupling"));

    let o = qbat(dir.path(), &["discharge", "--bell", "10", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    for args in [
        &["discharge", "--bell", "12"][..],
        &["ncell", "--plan", "f,x"],
        &["adiabatic", "--jtau", "5", "--schedule", "cosine"],
        &["adiabatic", "--jtau", "5", "--steps-per-unit", "4"],
        &["sweep-tau", "--from", "5", "--to", "1", "--points", "3"],
        &["selftest", "AC-99"],
    ] {
        assert_eq!(qbat(dir.path(), args).status.code(), Some(2), "{args:?}");
    }

    let o = Command::new(env!("CARGO_BIN_EXE_qbat"))
        .args(["trap-check"])
        .current_dir(dir.path())
        .env("QBAT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threads_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qbat"))
            .args(["sweep-tau", "--from", "2", "--to", "6", "--points", "3"])
            .current_dir(dir.path())
            .env("QBAT_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("3");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_rows_follow_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["sweep-tau", "--from", "1", "--to", "100", "--points", "20", "--steps-per-unit", "32"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let header = csv.lines().next().unwrap();
    assert!(header.ends_with(",final_charge_over_E0"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 60);
    let taus = column(&csv, "tau_J");
    assert!(taus.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(taus[0], 1.0);
    assert_eq!(taus[59], 100.0);
    let schedules: Vec<&str> = rows.iter().take(3).map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(schedules, ["linear", "sin2", "smoothstep"]);
}

#[test]
fn ncell_plan_totals() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["ncell", "--plan", "f,H,h", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["total_at_tau_d_hbar_omega"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(v["columns"][3], "cell1_over_E0");
}

#[test]
fn adiabatic_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["adiabatic", "--jtau", "20", "--schedule", "smoothstep", "--samples", "21"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 22);
    assert!(csv.lines().next().unwrap().contains("ec_adiabatic_hbar_omega_J"));
    let o = qbat(dir.path(), &["adiabatic", "--jtau", "20", "--summary"]);
    let ratio = column(&stdout(&o), "final_charge_over_E0");
    assert_eq!(ratio.len(), 1);
    assert!(ratio[0] > 0.9 && ratio[0] < 1.0);
}

#[test]
fn separable_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["separable", "--grid", "11"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let v = column(&csv, "max_charge_over_E0");
    assert_eq!(v.len(), 121);
    assert_eq!(v.iter().copied().fold(f64::MIN, f64::max), v[120]);
}

#[test]
fn selftest_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["selftest", "AC-1", "AC-12"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("AC-1  PASS") && out.contains("AC-12 PASS"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbat(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sweep-tau"));
}
