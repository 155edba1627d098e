use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use memsched::fixtures;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memsched"))
}

struct Inputs {
    dir: TempDir,
    platform: PathBuf,
    workload: PathBuf,
}

fn inputs(workload: &memsched::Workload) -> Inputs {
    let dir = tempfile::tempdir().unwrap();
    let platform = dir.path().join("platform.json");
    let wl = dir.path().join("workload.json");
    fs::write(&platform, fixtures::reference_platform().to_json()).unwrap();
    fs::write(&wl, workload.to_json()).unwrap();
    Inputs { dir, platform, workload: wl }
}

fn run(args: &[&str], inputs: &Inputs) -> Output {
    bin()
        .args(args)
        .arg("--platform")
        .arg(&inputs.platform)
        .arg("--workload")
        .arg(&inputs.workload)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn pair() -> memsched::Workload {
    fixtures::batch(vec![fixtures::nw_like(), fixtures::gaussian_like()])
}

#[test]
fn predict_table() {
    let i = inputs(&pair());
    let o = run(&["predict"], &i);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "task,o_d_ms,o_m_ms,o_h_ms,idle_ms,best");
    assert!(lines[1].starts_with("nw,") && lines[1].ends_with(",D"));
    assert!(lines[2].starts_with("gaussian,") && lines[2].ends_with(",D"));
}

#[test]
fn predict_empty_workload() {
    let i = inputs(&memsched::Workload::default());
    let o = run(&["predict"], &i);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "task,o_d_ms,o_m_ms,o_h_ms,idle_ms,best\n");
    let o = run(&["predict", "--format", "structured"], &i);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v, serde_json::json!([]));
}

#[test]
fn assign_converts_nw() {
    let i = inputs(&pair());
    let o = run(&["assign"], &i);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("nw,M,")));
    assert!(out.lines().any(|l| l.starts_with("gaussian,D,")));
}

#[test]
fn simulate_writes_report_and_timeline() {
    let i = inputs(&pair());
    let out_dir = i.dir.path().join("run");
    let o = bin()
        .args(["simulate", "--mode", "co", "--format", "structured", "--out"])
        .arg(&out_dir)
        .arg("--platform")
        .arg(&i.platform)
        .arg("--workload")
        .arg(&i.workload)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert!((report["makespan_ms"].as_f64().unwrap() - 15.5).abs() < 1e-9);
    assert!(out_dir.join("timeline.json").exists());
}

#[test]
fn simulate_report_to_stdout() {
    let i = inputs(&pair());
    let o = run(&["simulate", "--mode", "default"], &i);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("key,value\nmode,default\n"));
}

#[test]
fn compare_lists_three_modes() {
    let i = inputs(&pair());
    let o = run(&["simulate", "--compare"], &i);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let modes: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(modes, ["default", "mo", "co"]);
}

#[test]
fn missing_mode_is_usage_error() {
    let i = inputs(&pair());
    let o = run(&["simulate"], &i);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oom_still_writes_report() {
    let mut p = fixtures::reference_platform();
    p.total_memory = 1.0;
    let w = fixtures::batch((0..3).map(|k| fixtures::yolo_like(&format!("yolo{k}"), 0.193)).collect());
    let i = inputs(&w);
    fs::write(&i.platform, p.to_json()).unwrap();
    let o = run(&["simulate", "--mode", "default"], &i);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("oom,true"));
    let o = run(&["simulate", "--mode", "mo"], &i);
    assert_eq!(o.status.code(), Some(0));
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn malformed_workload_is_parse_error() {
    let i = inputs(&pair());
    fs::write(&i.workload, "{ not json").unwrap();
    let o = run(&["predict"], &i);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("error[parse]:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn invalid_value_is_invariant_error() {
    let i = inputs(&pair());
    let mut p = fixtures::reference_platform();
    p.l_gcache_access = 2.0 * p.l_mem_access;
    fs::write(&i.platform, p.to_json()).unwrap();
    let o = run(&["predict"], &i);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("l_gcache_access"));
}

#[test]
fn missing_file_is_io_error() {
    let o = bin()
        .args(["predict", "--platform", "/nonexistent/p.json", "--workload", "/nonexistent/w.json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(6));
    assert!(stderr(&o).starts_with("error[io]:"));
}

#[test]
fn fit_prints_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "samples.csv", "bytes,ms\n0,0.1\n1e6,0.12\n1e7,0.3\n");
    let o = bin().arg("fit").arg("--fit-input").arg(&csv).arg("--format").arg("structured").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["tr_ini_ms"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!((v["rate_ms_per_byte"].as_f64().unwrap() - 2e-8).abs() < 1e-20);
}

#[test]
fn fit_single_sample_is_invariant_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "samples.csv", "bytes,ms\n100,1\n");
    let o = bin().arg("fit").arg("--fit-input").arg(&csv).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
}
