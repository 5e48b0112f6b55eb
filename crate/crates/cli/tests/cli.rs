use std::path::Path;
use std::process::{Command, Output};

fn lics(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lics"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn run_ok(args: &[&str]) -> String {
    let o = lics(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

#[test]
fn sincos_simulation_prints_efficiency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0.25, "detuning_mode": "resonant"},
            "protocol": {"kind": "sincos", "AT": 1.9}}"#,
    );
    let out = dir.path().join("out");
    let printed = run_ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let value: f64 = printed.parse().unwrap();
    assert!((value - 0.6945).abs() < 2e-3, "{value}");
    assert_eq!(printed.split('.').nth(1).unwrap().len(), 6);
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x1,x2,x3,x4,norm2,pop_g,pop_e\n"));
    assert!(!traj.contains('\r'));
}

#[test]
fn zero_pulse_file_gives_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("zero.csv"),
        "t_start,t_end,u1,u2\n0,0.5,0,0\n0.5,1,0,0\n",
    );
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0, "detuning_mode": "resonant"},
            "protocol": {"kind": "file", "path": "zero.csv"}}"#,
    );
    let out = dir.path().join("out");
    let printed = run_ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(printed, "0.000000");
}

#[test]
fn malformed_config_exits_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    write(&cfg, "{\n  \"system\": {\"q\": -6,\n    \"R\": oops}\n}\n");
    let o = lics(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_keys_and_bad_values_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("extra.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0, "detuning_mode": "resonant", "gamma": 2}}"#,
    );
    let o = lics(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    write(&cfg, r#"{"system": {"q": -6, "R": -0.5, "detuning_mode": "resonant"}}"#);
    let o = lics(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cli_usage_errors() {
    assert_eq!(lics(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lics(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let o = lics(&[
        "robustness",
        "--pulse",
        "/nonexistent/pulse.csv",
        "--alphas",
        "1",
        "--baseline",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergent_propagation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // a very negative incoherence ratio is rejected up front, so provoke
    // blow-up with an enormous scale instead
    write(
        &dir.path().join("pulse.csv"),
        "t_start,t_end,u1,u2\n0,1000,1e150,1e150\n",
    );
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0, "detuning_mode": "dynamic_stark", "A": 1e300},
            "protocol": {"kind": "file", "path": "pulse.csv"}}"#,
    );
    let o = lics(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn robustness_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0.25, "detuning_mode": "resonant"},
            "protocol": {"kind": "sincos", "AT": 1.9}}"#,
    );
    let out = dir.path().join("out");
    let c = cfg.to_str().unwrap();
    let o = out.to_str().unwrap();
    let reference: f64 = run_ok(&["simulate", "--config", c, "--out", o]).parse().unwrap();
    let pulse = out.join("controls.csv");
    let p = pulse.to_str().unwrap();
    run_ok(&[
        "robustness",
        "--config",
        c,
        "--out",
        o,
        "--pulse",
        p,
        "--alphas",
        "1.0",
        "--baseline",
        "0.71",
    ]);
    let csv = std::fs::read_to_string(out.join("robustness.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "alpha,efficiency,gaussian_baseline");
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[1] - reference).abs() < 5e-7);
    assert_eq!(row[2], 0.71);
    assert!(lines.next().is_none());

    run_ok(&[
        "robustness",
        "--config",
        c,
        "--out",
        o,
        "--pulse",
        p,
        "--alphas",
        "0",
        "--baseline",
        "0.71",
    ]);
    let csv = std::fs::read_to_string(out.join("robustness.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(row[1], 0.0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0.0625, "detuning_mode": "dynamic_stark"},
            "numerics": {"n_intervals": 40},
            "sweep": {"values": [0.3, 0.6, 0.9]}}"#,
    );
    let c = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&[
            "sweep",
            "--kind",
            "duration",
            "--config",
            c,
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            "2",
        ]);
    }
    let read = |d: &Path| std::fs::read(d.join("sweep_duration.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("sweep_duration.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "sweep_duration");
    assert_eq!(manifest["seed"], 0);
}

#[test]
fn r_sweep_range_has_21_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    // a short cap keeps this fast; only the grid arithmetic is under test
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0, "detuning_mode": "dynamic_stark"},
            "numerics": {"saturation_cap": 0.2, "interval_width": 0.05},
            "sweep": {"start": 0, "stop": 1, "step": 0.05}}"#,
    );
    let out = dir.path().join("out");
    run_ok(&[
        "sweep",
        "--kind",
        "r",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(out.join("sweep_r.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "R,efficiency,AT,saturated");
    assert_eq!(rows.len(), 22);
    assert!(rows[21].starts_with("1,"));
}

#[test]
fn smoothing_reports_both_efficiencies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 0.25, "detuning_mode": "resonant"},
            "protocol": {"kind": "sincos", "AT": 1.9}}"#,
    );
    let out = dir.path().join("out");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    run_ok(&["simulate", "--config", c, "--out", o]);
    let p = out.join("controls.csv");
    let printed = run_ok(&[
        "smooth",
        "--config",
        c,
        "--out",
        o,
        "--pulse",
        p.to_str().unwrap(),
        "--factor",
        "10",
    ]);
    let v: Vec<f64> = printed.split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(v.len(), 2);
    assert!((v[0] - v[1]).abs() < 1e-3, "{v:?}");
    assert!(out.join("smoothed_controls.csv").exists());
}

#[test]
fn optimize_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -6, "R": 1, "detuning_mode": "dynamic_stark"},
            "protocol": {"kind": "optimal", "AT": 0.7},
            "numerics": {"n_intervals": 50}}"#,
    );
    let out = dir.path().join("out");
    let printed = run_ok(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let v: f64 = printed.parse().unwrap();
    assert!(v > 0.41, "{v}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("optimization.json")).unwrap()).unwrap();
    assert!(report["iterations"].as_u64().unwrap() > 0);
    assert!(out.join("structure.json").exists());
}

#[test]
fn q_sweep_single_point_matches_table_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"system": {"q": -2, "R": 0.25, "detuning_mode": "dynamic_stark"},
            "sweep": {"values": [-6]}}"#,
    );
    let out = dir.path().join("out");
    run_ok(&[
        "sweep",
        "--kind",
        "q",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(out.join("sweep_q.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "-6");
    let e: f64 = row[1].parse().unwrap();
    assert!((e - 0.5373).abs() < 0.005, "{e}");
}

#[test]
fn table1_reproduces_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let text = run_ok(&["table1", "--out", out.to_str().unwrap()]);
    assert!(text.contains("detuning: resonant") && text.contains("detuning: dynamic_stark"));
    let csv = std::fs::read_to_string(out.join("table1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mode,R,gaussian,gaussian_T,gaussian_tau,sincos,sincos_AT,optimal,optimal_AT"
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 8);
    let cell = |mode: &str, r: &str, col: usize| -> f64 {
        rows.iter().find(|row| row[0] == mode && row[1] == r).unwrap()[col]
            .parse()
            .unwrap()
    };
    // resonant R=1: (0.53, 0.4347, >= 0.5641)
    assert!((cell("resonant", "1", 2) - 0.53).abs() <= 0.01);
    assert!((cell("resonant", "1", 5) - 0.4347).abs() <= 0.003);
    assert!(cell("resonant", "1", 7) >= 0.5641);
    // dynamic Stark R=1/4: (0.48, 0.4545, >= 0.5323)
    assert!((cell("dynamic_stark", "0.25", 2) - 0.48).abs() <= 0.01);
    assert!((cell("dynamic_stark", "0.25", 5) - 0.4545).abs() <= 0.003);
    assert!(cell("dynamic_stark", "0.25", 7) >= 0.5323);
    // resonant R=0: everything close to one
    assert!(cell("resonant", "0", 2) >= 0.99);
    assert!(cell("resonant", "0", 7) >= 0.99);
    assert!(cell("resonant", "0", 5) >= 0.985);
}
