use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("opengrape-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opengrape"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg("1")
        .output()
        .expect("binary runs")
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lie_dim_of_system_ii() {
    let out = scratch("lie");
    let o = run(&["lie-dim", "--system", "system-II"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "66");
    let m = manifest(&out);
    assert_eq!(m["command"], "lie-dim");
    assert_eq!(m["result"]["dimension"], 66);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);

    let o = run(&["lie-dim", "--system", "system-I"], &out);
    assert_eq!(stdout(&o).trim(), "28");
    let o = run(&["lie-dim", "--protected"], &out);
    assert_eq!(stdout(&o).trim(), "15");
}

#[test]
fn gamma_report_pure_t2_histogram() {
    let out = scratch("gamma");
    let o = run(&["gamma-report", "--model", "pure-t2"], &out);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let rows: Vec<(f64, usize)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows, vec![(0.0, 64), (4.0, 128), (8.0, 64)]);
    let m = manifest(&out);
    assert!(m["result"]["protected_kernel_residual"].as_f64().unwrap() < 1e-12);
    assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == "blocks.csv"));
}

#[test]
fn optimize_then_evaluate() {
    let out = scratch("opt");
    let args = ["optimize", "--T", "1", "--dt", "0.05", "--iterations", "15", "--restarts", "2", "--seed", "3"];
    let o = run(&args, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    let f = result["fidelity"].as_f64().unwrap();
    assert!(f > 0.0 && f <= 1.0);
    let m = manifest(&out);
    assert_eq!(m["seeds"]["master"], 3);
    assert_eq!(m["seeds"]["restarts"].as_array().unwrap().len(), 2);
    assert_eq!(m["inputs"]["optimizer"]["max_iterations"], 15);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,fidelity\n"));

    // Same seed, same pulse.
    let again = scratch("opt-again");
    run(&args, &again);
    assert_eq!(
        std::fs::read_to_string(out.join("pulse.txt")).unwrap(),
        std::fs::read_to_string(again.join("pulse.txt")).unwrap()
    );

    let ev = scratch("eval");
    let pulse = out.join("pulse.txt");
    let o = run(&["evaluate", "--pulse", pulse.to_str().unwrap()], &ev);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let scatter = std::fs::read_to_string(ev.join("scatter.csv")).unwrap();
    let closed: f64 = scatter.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((closed - f).abs() < 1e-9, "{closed} vs {f}");
}

#[test]
fn config_file_and_flag_override() {
    let out = scratch("config");
    let cfg = out.join("run.json");
    std::fs::write(&cfg, r#"{"system": "system-I", "lie_tolerance": 1e-8}"#).unwrap();
    let o = run(&["lie-dim", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(stdout(&o).trim(), "28");
    let o = run(&["lie-dim", "--config", cfg.to_str().unwrap(), "--system", "system-II"], &out);
    assert_eq!(stdout(&o).trim(), "66");
    assert_eq!(manifest(&out)["inputs"]["lie_tolerance"], 1e-8);
}

#[test]
fn config_errors_exit_with_2() {
    let out = scratch("errors");
    let cfg = out.join("bad.json");
    std::fs::write(&cfg, r#"{"sytem": "system-I"}"#).unwrap();
    for args in [
        vec!["lie-dim", "--config", cfg.to_str().unwrap()],
        vec!["lie-dim", "--config", "/nonexistent/run.json"],
        vec!["optimize", "--relaxation", "nope"],
        vec!["optimize", "--dt", "0"],
        vec!["compare"],
        vec!["evaluate"],
        vec!["top-curve"],
        vec!["lie-dim", "--system", "system-III"],
    ] {
        let o = run(&args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn trotter_preset_writes_program_only() {
    let out = scratch("trotter");
    let o = run(&["trotter", "--relaxation", "full"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("program.txt").exists() && out.join("plan.json").exists());
    assert!(!out.join("pulse.txt").exists());
    let r = &manifest(&out)["result"];
    assert_eq!(r["plan"], "realistic-cnot");
    assert!(r["closed_fidelity"].as_f64().unwrap() > 0.95);
    assert_eq!(r["control_power_hz"], 5e5);
    assert_eq!(manifest(&out)["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn small_trotter_plan_expands_to_a_pulse_file() {
    let out = scratch("plan");
    let full = scratch("plan-full");
    run(&["trotter"], &full);
    let mut plan: Value = serde_json::from_str(&std::fs::read_to_string(full.join("plan.json")).unwrap()).unwrap();
    // First two pulses and one free segment of the preset.
    let segs = plan["items"].as_array().unwrap()[..3].to_vec();
    plan["items"] = Value::Array(segs);
    let path = out.join("small.json");
    std::fs::write(&path, plan.to_string()).unwrap();
    let o = run(&["trotter", "--plan", path.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("pulse.txt").exists());

    let ev = scratch("plan-eval");
    let pulse = out.join("pulse.txt");
    let o = run(&["evaluate", "--pulse", pulse.to_str().unwrap()], &ev);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn top_curve_and_trajectory() {
    let out = scratch("top");
    let o = run(
        &["top-curve", "--t-list", "0.5,1", "--dt", "0.05", "--family-size", "2", "--iterations", "5", "--relaxation", "pure-t2"],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curve = std::fs::read_to_string(out.join("top_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    assert!(curve.starts_with("T_s,mean,rmsd,min,max"));
    assert_eq!(std::fs::read_to_string(out.join("top_curve_open.csv")).unwrap().lines().count(), 3);
    assert_eq!(manifest(&out)["seeds"]["members"].as_array().unwrap().len(), 4);

    let tr = scratch("traj");
    let pulse = out.join("sequences/T001_m000.txt");
    let o = run(&["project-trajectory", "--relaxation", "full", "--pulse", pulse.to_str().unwrap()], &tr);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(tr.join("trajectory.csv")).unwrap();
    // 21 time points, 16 basis states.
    assert_eq!(rows.lines().count(), 1 + 21 * 16);
}
