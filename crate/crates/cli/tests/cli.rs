use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use topt_cli::output::CSV_HEADER;
use topt_oracles::kinematics;

fn topt(cmd: &str, config: &Value, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("mission.json");
    std::fs::write(&cfg, config.to_string()).unwrap();
    run_raw(cmd, &cfg, &dir.join("out"), extra)
}

fn run_raw(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topt"))
        .args([cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .args(extra)
        .output()
        .unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solve2pt_unit_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "u_max": 1.0, "g": [0.0, 0.0, 0.0],
        "start": {"r": [0.0, 0.0, 0.0], "v": [0.0, 0.0, 0.0]},
        "end": {"r": [1.0, 0.0, 0.0], "v": [0.0, 0.0, 0.0]}
    });
    ok(&topt("solve2pt", &cfg, dir.path(), &[]));
    let s = read_json(dir.path().join("out/summary.json"));
    assert!((s["t_f"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((last[0] - 2.0).abs() < 1e-9 && (last[1] - 1.0).abs() < 1e-9);
    assert!((last[10] - 1.0).abs() < 1e-9);
}

#[test]
fn solve2pt_hover_climb() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "u_max": 10.5,
        "start": {"r": [0.0, 0.0, 0.0], "v": [0.0, 0.0, 0.0]},
        "end": {"r": [0.0, 0.0, 1.0], "v": [0.0, 0.0, 0.0]}
    });
    ok(&topt("solve2pt", &cfg, dir.path(), &[]));
    let s = read_json(dir.path().join("out/summary.json"));
    let expected = kinematics::rest_to_rest_time(1.0, 0.7, 20.3);
    assert!((s["t_f"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert!(s["end_position_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ \"u_max\": 10.5, ").unwrap();
    let o = run_raw("plan", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = read_json(out.join("error.json"));
    assert_eq!(e["error"], "config");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn unknown_keys_and_weak_thrust_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = json!({"u_max": 10.5, "waypoints": [[0, 0, 0], [1, 0, 0]], "speed": 3});
    assert_eq!(topt("plan", &unknown, dir.path(), &[]).status.code(), Some(2));
    let weak = json!({"u_max": 9.0, "waypoints": [[0, 0, 0], [1, 0, 0]]});
    assert_eq!(topt("plan", &weak, dir.path(), &[]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(run_raw("plan", &missing, &dir.path().join("o"), &[]).status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    std::fs::write(&cfg, json!({"u_max": 10.5, "waypoints": [[0, 0, 0], [1, 0, 0]]}).to_string()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_topt"))
        .args(["plan", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .env("TOPT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "u_max": 10.5,
        "waypoints": [[0, 0, 0], [2, 1, 0], [3, 3, 1]],
        "solver": {"nlp_max_iter": 1, "nlp_inner_iter": 1, "nlp_starts": 1}
    });
    let o = topt("plan", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(dir.path().join("out/error.json"))["error"], "solver");
}

#[test]
fn collinear_plan_refines_every_segment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"u_max": 10.5, "g": [0, 0, 0], "waypoints": [[0, 0, 0], [1, 0, 0], [2, 0, 0]]});
    ok(&topt("plan", &cfg, dir.path(), &["--switch-points", "2"]));
    let c = read_json(dir.path().join("out/compare.json"));
    assert_eq!(c["switch_points"], 2);
    for seg in c["segments"].as_array().unwrap() {
        assert!(seg["time_b"].as_f64().unwrap() <= seg["time_a"].as_f64().unwrap() + 1e-9);
    }
    for name in ["direct.csv", "pmp.csv"] {
        let csv = std::fs::read_to_string(dir.path().join("out").join(name)).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    }
}

#[test]
fn two_by_two_survey() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "u_max": 10.5,
        "survey": {
            "origin": [0, 0, 0], "width": 20, "height": 20, "altitude": 10,
            "fov_x": std::f64::consts::FRAC_PI_2, "fov_y": std::f64::consts::FRAC_PI_2,
            "overlap_x": 0.5, "overlap_y": 0.5
        }
    });
    ok(&topt("survey", &cfg, dir.path(), &[]));
    let w = read_json(dir.path().join("out/waypoints.json"));
    let pts: Vec<Vec<f64>> = serde_json::from_value(w["waypoints"].clone()).unwrap();
    let expected = [[5.0, 5.0, 10.0], [15.0, 5.0, 10.0], [15.0, 15.0, 10.0], [5.0, 15.0, 10.0]];
    assert_eq!(pts.len(), 4);
    for (p, e) in pts.iter().zip(expected) {
        assert!(p.iter().zip(e).all(|(a, b)| (a - b).abs() < 1e-9), "{p:?}");
    }
    assert!(dir.path().join("out/compare.json").exists());
}

#[test]
fn baseline_is_slower_and_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"u_max": 10.5, "waypoints": [[0, 0, 1], [3, 0, 1], [3, 2, 1], [0, 2, 1]]});
    ok(&topt("baseline", &cfg, dir.path(), &[]));
    let b = read_json(dir.path().join("out/baseline.json"));
    let ratio = b["ratio"].as_f64().unwrap();
    assert!(ratio.is_finite() && ratio > 1.0, "{ratio}");
    assert_eq!(b["thrust_feasible"], true);
    assert!(b["peak_thrust"].as_f64().unwrap() <= 10.5);
    assert!(dir.path().join("out/minsnap.csv").exists());
}
