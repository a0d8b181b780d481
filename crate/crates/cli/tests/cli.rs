use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn iongrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iongrad"))
        .args(args)
        .env_remove("IONGRAD_NMAX")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn canned(name: &str) -> String {
    format!(
        "{}/../../configs/paper/{name}.ini",
        env!("CARGO_MANIFEST_DIR")
    )
}

/// Short, cheap fig4 run.
const SHORT_FIG4: &[&str] = &[
    "--set",
    "figure.duration=0.3",
    "--set",
    "figure.record_points=20",
    "--set",
    "figure.truncation_check=false",
    "--no-plot",
];

#[test]
fn validate_echoes_internal_units() {
    let o = iongrad(&["validate", "--config", &canned("fig1")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("gamma = 0.1 krad/s"));
    assert!(out.contains("eps = 0.259869 krad/s"), "{out}");
}

#[test]
fn missing_unit_is_a_config_error_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    let text = fs::read_to_string(canned("fig1"))
        .unwrap()
        .replace("kappa = 12 kHz_paper", "kappa = 12");
    fs::write(&path, text).unwrap();
    let o = iongrad(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 7, column 11"), "{}", stderr(&o));
}

#[test]
fn unknown_figure_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = iongrad(&["figure", "fig7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn analytic_prints_json() {
    let o = iongrad(&["analytic", "kappa-star"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["kappa"].as_f64().unwrap() - 0.277).abs() < 0.005);

    let o = iongrad(&["analytic", "bmin", "--set", "probe.gamma=0.05 kHz_paper"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let b = v["Bprime_min_T_per_m"].as_f64().unwrap() * 1e-6;
    assert!((b / 4e-11 - 1.0).abs() < 0.03, "{b}");
}

fn write_sweep(dir: &Path, sweep: &str) -> String {
    let base = fs::read_to_string(format!(
        "{}/../../configs/sweeps/zeta_squeezed.ini",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let head = base.split("[sweep]").next().unwrap();
    let path = dir.join("sweep.ini");
    fs::write(&path, format!("{head}[sweep]\n{sweep}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn empty_sweep_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_sweep(
        dir.path(),
        "parameter = zeta_sq\nfrom = 0.5\nto = 0.5\npoints = 4\n",
    );
    let out = dir.path().join("out");
    let o = iongrad(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn failing_points_land_in_error_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_sweep(
        dir.path(),
        "parameter = zeta_sq\nfrom = 0.5\nto = 1.5\npoints = 3\n",
    );
    let o = iongrad(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("zeta_squeezed_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "zeta_sq,signal,snr,I_cl,I_Q,min_detectable,error");
    assert!(
        lines[1].ends_with(','),
        "first point succeeds: {}",
        lines[1]
    );
    assert!(lines[2].to_lowercase().contains("critical"), "{}", lines[2]);
    assert!(lines[3].contains("NaN"));
}

#[test]
fn figure_output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let mut args = vec![
            "figure",
            "fig4",
            "--out",
            dir.path().to_str().unwrap(),
            "--jobs",
            jobs,
        ];
        args.extend_from_slice(SHORT_FIG4);
        let o = iongrad(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["fig4_analytic.csv", "fig4_numeric.csv", "fig4_report.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let header = fs::read_to_string(a.path().join("fig4_numeric.csv")).unwrap();
    assert!(header.starts_with("t_ms,n_com_full,n_rock_full,n_com_effective,n_rock_effective\n"));
}

#[test]
fn threshold_breach_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "figure",
        "fig4",
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "figure.threshold=1e-12",
        "--set",
        "figure.record_points=40",
        "--set",
        "figure.truncation_check=false",
        "--no-plot",
    ];
    let o = iongrad(&args);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig4_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn truncation_failure_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["figure", "fig4", "--out", dir.path().to_str().unwrap()];
    args.extend_from_slice(SHORT_FIG4);
    let o = Command::new(env!("CARGO_BIN_EXE_iongrad"))
        .args(&args)
        .env("IONGRAD_NMAX", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
