//! End-to-end tests of the binary: exit codes, artifacts, determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dmlpg"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn default_test_problem_run_produces_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h = 0.2\ndt = 0.05\n");
    let out = tmp.path().join("out");
    let status = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["solution.csv", "errors.csv", "timings.csv", "manifest.txt"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    let mut lines = errors.lines();
    assert_eq!(lines.next().unwrap(), "h,max_err,rms_err,order");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let max_err: f64 = row[1].parse().unwrap();
    assert!(max_err.is_finite() && max_err > 0.0);
    let solution = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(solution.lines().count(), 1 + 36); // header + 6x6 nodes
}

#[test]
fn fgm_run_samples_the_probe_points() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "problem = fgm\ngamma = 0\nscheme = mol\nt_final = 2\n",
    );
    let out = tmp.path().join("out");
    let status = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let solution = fs::read_to_string(out.join("solution.csv")).unwrap();
    // Probe abscissae x1/a in {0.25, 0.5, 0.75} with a = 0.04.
    for x in [0.01_f64, 0.02, 0.03] {
        assert!(
            solution.lines().skip(1).any(|l| {
                let col: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
                (col - x).abs() < 1e-12
            }),
            "missing probe {x}"
        );
    }
    // Homogeneous strip has a series reference, so errors.csv exists.
    assert!(out.join("errors.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical_except_timings() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h = 0.2\ndt = 0.05\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let status = bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["solution.csv", "errors.csv", "manifest.txt"] {
        let left = fs::read(a.join(name)).unwrap();
        let right = fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
}

#[test]
fn invalid_config_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h = -0.1\n");
    let output = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("`h`"), "stderr: {stderr}");
    assert!(stderr.contains("line 1"), "stderr: {stderr}");
}

#[test]
fn solver_failure_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    // A 3x3 grid cannot support a degree-4 basis (Q = 15 > 9 nodes).
    let cfg = write_config(tmp.path(), "h = 0.5\nm = 4\ndt = 0.05\n");
    let output = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("stencil"), "stderr: {stderr}");
}

#[test]
fn convergence_study_writes_orders() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h_list = 0.25,0.125\ndt = 0.025\n");
    let out = tmp.path().join("study");
    let status = bin()
        .args(["study", "convergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines.len(), 3); // header + two grids
    // First row has an empty order column, the second a finite one.
    assert!(lines[1].ends_with(','));
    let order: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
    assert!(order.is_finite() && order > 1.0, "order {order}");
}

#[test]
fn timing_study_writes_phases() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h_list = 0.25,0.125\ndt = 0.025\n");
    let out = tmp.path().join("study");
    let status = bin()
        .args(["study", "timing", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let timings = fs::read_to_string(out.join("timings.csv")).unwrap();
    assert!(timings.starts_with("phase,seconds\n"));
    assert!(timings.contains("assemble_h=0.25,"));
    assert!(timings.contains("solve_h=0.125,"));
    for line in timings.lines().skip(1) {
        let secs: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(secs > 0.0);
    }
}
