use std::path::Path;
use std::process::{Command, Output};

use sweepnet::io::save_network;
use sweepnet::lattice::LoadSchedule;
use sweepnet::linalg::Vector;

fn sweepnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sweepnet")).args(args).output().expect("binary runs")
}

fn generate(dir: &Path, which: &str) -> String {
    let path = dir.join(format!("{which}.json"));
    let p = path.to_str().unwrap().to_string();
    let out = sweepnet(&["generate", which, "--out", &p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn generated_example_validates() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate(dir.path(), "example1");
    let out = sweepnet(&["validate", &net]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dim_v=2"), "{text}");
    assert!(text.contains("assumptions=pass"));
}

#[test]
fn failing_assumptions_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // a free square frame: rigid motions are zero modes
    let def = sweepnet::generators::square_frame();
    let loads = LoadSchedule::displacement(Vector::zeros(0), Vector::zeros(0), 8, 1.0);
    let loose = dir.path().join("loose.json");
    save_network(&loose, &def, &loads).unwrap();
    let out = sweepnet(&["validate", loose.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("assumptions=fail"));
}

#[test]
fn leapfrog_event_rows() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate(dir.path(), "example1");
    let ev = dir.path().join("ev.csv");
    let traj = dir.path().join("traj.csv");
    let out = sweepnet(&[
        "solve", &net, "--solver", "leapfrog", "--out", traj.to_str().unwrap(), "--events", ev.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let events = std::fs::read_to_string(&ev).unwrap();
    let times: Vec<f64> = events.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(times.iter().any(|t| (t - 0.042).abs() <= 1e-3), "{events}");
    assert!(times.iter().any(|t| (t - 0.055).abs() <= 1e-3), "{events}");
    assert!(times.iter().all(|t| (t - 0.042).abs() <= 1e-3 || (t - 0.055).abs() <= 1e-3));
}

#[test]
fn catchup_spaces_agree() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate(dir.path(), "example1");
    let run = |space: &str| {
        let out = sweepnet(&["solve", &net, "--solver", "catchup", "--space", space, "--steps", "400"]);
        assert!(out.status.success());
        rows(&String::from_utf8(out.stdout).unwrap())
    };
    let (full, reduced) = (run("full"), run("reduced"));
    assert_eq!(full.len(), reduced.len());
    // compare time and stresses; the y columns differ in length between spaces
    for (a, b) in full.iter().zip(&reduced) {
        assert_eq!(a[0], b[0]);
        let sa = &a[a.len() - 10..];
        let sb = &b[b.len() - 10..];
        let gap = sa.iter().zip(sb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap <= 1e-8, "gap {gap} at t = {}", a[0]);
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate(dir.path(), "example1");
    let a = sweepnet(&["solve", &net, "--solver", "catchup", "--steps", "200"]).stdout;
    let b = sweepnet(&["solve", &net, "--solver", "catchup", "--steps", "200"]).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(sweepnet(&["solve", "--bogus"]).status.code(), Some(64));
    assert_eq!(sweepnet(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(sweepnet(&["generate", "example1", "--mesh", "x"]).status.code(), Some(64));
}

#[test]
fn missing_file_is_runtime_error() {
    assert_eq!(sweepnet(&["validate", "/nonexistent/net.json"]).status.code(), Some(2));
}

#[test]
fn analyze_reports_stiffness() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate(dir.path(), "periodic");
    let traj = dir.path().join("t.csv");
    let ev = dir.path().join("e.csv");
    let out = sweepnet(&["solve", &net, "--out", traj.to_str().unwrap(), "--events", ev.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = sweepnet(&[
        "analyze", traj.to_str().unwrap(), "--net", &net, "--events", ev.to_str().unwrap(), "--label", "periodic",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let e: f64 = text.lines().find_map(|l| l.strip_prefix("stiffness=")).unwrap().parse().unwrap();
    assert!(e > 0.0);
    assert!(text.contains("label=periodic"));
    assert!(!text.contains("first_event_time=none"));
}

#[test]
fn batch_mode_writes_one_file_per_network() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "example1");
    let b = generate(dir.path(), "periodic");
    let outdir = dir.path().join("runs");
    let out = sweepnet(&["solve", &a, &b, "--out-dir", outdir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for stem in ["example1", "periodic"] {
        assert!(outdir.join(format!("{stem}.csv")).exists());
        assert!(outdir.join(format!("{stem}.events.csv")).exists());
    }
    let single = sweepnet(&["solve", &a]).stdout;
    assert_eq!(std::fs::read(outdir.join("example1.csv")).unwrap(), single);
}

#[test]
fn safe_load_check_passes_on_displacement_loading() {
    let dir = tempfile::tempdir().unwrap();
    let net = generate(dir.path(), "example1");
    let out = sweepnet(&["check-safe-load", &net]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("safe_load=pass"));
}
