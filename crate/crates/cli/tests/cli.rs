use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn windsense(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_windsense"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        - 1
}

const QUIET: &str = "noise.accel_sd = 0\nnoise.rotor_sd = 0\n";

/// Small noise-free calibration suite: 3 speeds × 12 yaw stops, 4 climb rates.
fn small_suite(dir: &Path, vertical: bool) -> Vec<String> {
    let vs = if vertical { "-3 -1 1 3" } else { "" };
    write(
        dir,
        "suite.conf",
        &format!(
            "scenario.kind = calibration-suite\nsweep.speeds = 0 4 8\nsweep.yaw_step_deg = 30\n\
             sweep.dwell = 2\nsuite.vertical_speeds = {vs}\nsuite.vertical_dwell = 4\n{QUIET}"
        ),
    );
    let o = windsense(dir, &["--config", "suite.conf", "--out", "suite", "--no-timestamp", "simulate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut args: Vec<String> = vec!["--out".into(), "cal".into(), "calibrate".into(), "--horizontal".into()];
    args.extend((0..3).map(|i| format!("suite/sweep_{i:02}.log.csv")));
    if vertical {
        args.push("--vertical".into());
        args.extend((0..4).map(|i| format!("suite/vertical_{i:02}.log.csv")));
    }
    args
}

#[test]
fn hover_log_has_one_row_per_step() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "h.conf", "scenario.duration = 10\nsim.dt = 0.02\n");
    let o = windsense(tmp.path(), &["--config", "h.conf", "--out", "o", "simulate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(data_rows(&tmp.path().join("o/flight.log.csv")), 500);
    assert_eq!(data_rows(&tmp.path().join("o/flight.truth.csv")), 500);
    let log = fs::read_to_string(tmp.path().join("o/flight.log.csv")).unwrap();
    assert!(log.starts_with("# generated"));
    assert!(log.contains("t,qw,qx,qy,qz,ax,ay,az,vx,vy,vz,px,py,pz,omega1,omega2,omega3,omega4,psi_d\n"));
}

#[test]
fn repeat_runs_are_identical() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.conf", "scenario.kind = circle\nscenario.duration = 8\nwind.speed = 3\n");
    for out in ["a", "b"] {
        let o = windsense(tmp.path(), &["--config", "c.conf", "--seed", "17", "--out", out, "--no-timestamp", "simulate"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["flight.log.csv", "flight.truth.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let o = windsense(tmp.path(), &["--config", "c.conf", "--seed", "18", "--out", "c", "--no-timestamp", "simulate"]);
    assert_eq!(code(&o), 0);
    assert_ne!(
        fs::read(tmp.path().join("a/flight.log.csv")).unwrap(),
        fs::read(tmp.path().join("c/flight.log.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_one_with_diagnostics() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.conf", "# vehicle\nvehicle.mass = -1\n");
    let o = windsense(tmp.path(), &["--config", "bad.conf", "simulate"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("vehicle.mass") && err.contains("line 2"), "{err}");
    assert!(!tmp.path().join("flight.log.csv").exists());

    write(tmp.path(), "unk.conf", "vehicle.wings = 2\n");
    assert_eq!(code(&windsense(tmp.path(), &["--config", "unk.conf", "simulate"])), 1);
    assert_eq!(code(&windsense(tmp.path(), &["simulate", "--bogus"])), 1);
    assert_eq!(code(&windsense(tmp.path(), &["--config", "missing.conf", "simulate"])), 1);
}

#[test]
fn saturating_scenario_is_a_numerical_error() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "s.conf", "scenario.kind = circle\nscenario.radius = 20\nscenario.period = 4\n");
    let o = windsense(tmp.path(), &["--config", "s.conf", "simulate"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("t = 0.000"), "{}", stderr(&o));
}

#[test]
fn calibrate_estimate_evaluate() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let mut args = small_suite(dir, true);
    args.extend(["--lambda".into(), "0".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = windsense(dir, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(dir.join("cal/calibration_report.txt")).unwrap();
    let residual: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("horizontal.residual_rms_mps"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(residual < 1e-6, "{report}");
    assert!(fs::read_to_string(dir.join("cal/models.txt")).unwrap().starts_with("windsense-models"));

    write(dir, "still.conf", &format!("scenario.duration = 20\n{QUIET}"));
    let o = windsense(dir, &["--config", "still.conf", "--out", "still", "simulate"]);
    assert_eq!(code(&o), 0);
    let o = windsense(
        dir,
        &["--config", "still.conf", "--out", "still", "estimate", "--log", "still/flight.log.csv", "--model", "cal/models.txt"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let est = fs::read_to_string(dir.join("still/estimates.csv")).unwrap();
    assert_eq!(data_rows(&dir.join("still/estimates.csv")), data_rows(&dir.join("still/flight.log.csv")));
    let header: Vec<&str> = est.lines().nth(1).unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "speed_h").unwrap();
    let speeds: Vec<f64> = est.lines().skip(2).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    let mean = speeds.iter().map(|s| s.abs()).sum::<f64>() / speeds.len() as f64;
    assert!(mean < 0.1, "mean still-air speed {mean}");

    let o = windsense(
        dir,
        &["--out", "still", "evaluate", "--estimates", "still/estimates.csv", "--truth", "still/flight.truth.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["metrics.txt", "metrics.csv", "errors.csv", "speed_error_histogram.csv"] {
        assert!(dir.join("still").join(f).exists(), "{f}");
    }
}

#[test]
fn calibrate_without_vertical_logs_warns() {
    let tmp = TempDir::new().unwrap();
    let args = small_suite(tmp.path(), false);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = windsense(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("cal/calibration_report.txt")).unwrap();
    assert!(report.contains("omitted"), "{report}");
    let doc = fs::read_to_string(tmp.path().join("cal/models.txt")).unwrap();
    assert!(!doc.contains("vertical."));

    // a model without the vertical half cannot drive the estimator
    let o = windsense(
        tmp.path(),
        &["estimate", "--log", "suite/sweep_00.log.csv", "--model", "cal/models.txt"],
    );
    assert_ne!(code(&o), 0);
}

#[test]
fn calibrate_rejects_empty_log() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "e.log.csv", "");
    let o = windsense(tmp.path(), &["calibrate", "--horizontal", "e.log.csv"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    write(tmp.path(), "h.log.csv", "t,qw,qx,qy,qz,ax,ay,az,vx,vy,vz,px,py,pz,omega1,omega2,omega3,omega4,psi_d\n");
    let o = windsense(tmp.path(), &["calibrate", "--horizontal", "h.log.csv"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn estimate_input_errors() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let args = small_suite(dir, true);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(code(&windsense(dir, &args)), 0);

    // truncated final row
    let log = fs::read_to_string(dir.join("suite/sweep_01.log.csv")).unwrap();
    let cut = log.trim_end().rfind(',').unwrap();
    write(dir, "cut.log.csv", &log[..cut]);
    let rows = data_rows(&dir.join("suite/sweep_01.log.csv"));
    let o = windsense(dir, &["estimate", "--log", "cut.log.csv", "--model", "cal/models.txt"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(&format!("row {rows}")), "{}", stderr(&o));

    // hexacopter configuration against a quadrotor model
    write(dir, "hex.conf", "vehicle.rotor_count = 6\n");
    let o = windsense(
        dir,
        &["--config", "hex.conf", "estimate", "--log", "suite/sweep_01.log.csv", "--model", "cal/models.txt"],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("rotor count"), "{}", stderr(&o));

    write(dir, "junk.txt", "not a model\n");
    let o = windsense(dir, &["estimate", "--log", "suite/sweep_01.log.csv", "--model", "junk.txt"]);
    assert_eq!(code(&o), 2);
}

fn wind_table(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut s = String::from("t,wind_x,wind_y,wind_z\n");
    for (t, x, y, z) in rows {
        s.push_str(&format!("{t:e},{x:e},{y:e},{z:e}\n"));
    }
    s
}

fn metric(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("metrics.csv"))
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")).map(str::to_string))
        .unwrap()
}

#[test]
fn evaluate_identical_series() {
    let tmp = TempDir::new().unwrap();
    let rows: Vec<_> = (0..50)
        .map(|i| {
            let t = i as f64 * 0.1;
            (t, 3.0 + t.sin(), 1.0 + 0.5 * t, -0.2 * t.cos())
        })
        .collect();
    write(tmp.path(), "e.csv", &wind_table(&rows));
    let o = windsense(tmp.path(), &["evaluate", "--estimates", "e.csv", "--truth", "e.csv", "--settle", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for m in ["rmse_speed_mps", "rmse_dir_deg", "rmse_vspeed_mps"] {
        assert_eq!(metric(tmp.path(), m).parse::<f64>().unwrap(), 0.0, "{m}");
    }
    for m in ["pearson_speed", "pearson_dir"] {
        assert!((metric(tmp.path(), m).parse::<f64>().unwrap() - 1.0).abs() < 1e-12, "{m}");
    }
}

#[test]
fn evaluate_wraps_direction() {
    let tmp = TempDir::new().unwrap();
    let at = |deg: f64| {
        let r = deg.to_radians();
        (0..4).map(|i| (i as f64, 2.0 * r.cos(), 2.0 * r.sin(), 0.0)).collect::<Vec<_>>()
    };
    write(tmp.path(), "e.csv", &wind_table(&at(359.0)));
    write(tmp.path(), "t.csv", &wind_table(&at(1.0)));
    let o = windsense(tmp.path(), &["evaluate", "--estimates", "e.csv", "--truth", "t.csv", "--settle", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let d: f64 = metric(tmp.path(), "rmse_dir_deg").parse().unwrap();
    assert!((d - 2.0).abs() < 1e-9, "{d}");
    assert_eq!(metric(tmp.path(), "pearson_dir"), "undefined");
}

#[test]
fn evaluate_rejects_single_row_and_misalignment() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "one.csv", &wind_table(&[(0.0, 1.0, 0.0, 0.0)]));
    let o = windsense(tmp.path(), &["evaluate", "--estimates", "one.csv", "--truth", "one.csv", "--settle", "0"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    write(tmp.path(), "a.csv", &wind_table(&[(0.0, 1.0, 0.0, 0.0), (1.0, 1.0, 0.0, 0.0)]));
    write(tmp.path(), "b.csv", &wind_table(&[(0.0, 1.0, 0.0, 0.0), (2.0, 1.0, 0.0, 0.0)]));
    let o = windsense(tmp.path(), &["evaluate", "--estimates", "a.csv", "--truth", "b.csv", "--settle", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));
    assert!(!tmp.path().join("metrics.txt").exists());
}
