//! End-to-end checks of the `crp` binary: exit codes, file shapes, and
//! output determinism at desk scale.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crp_cli::formats::{ScenarioFile, SolutionFile, SummaryFile};

fn crp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn generate_writes_benchmark_scale_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(
        &["generate", "--seed", "7", "--flights", "320", "--levels", "12", "--out", "gen"],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let scenario: ScenarioFile = read_json(&dir.path().join("gen/scenario.json"));
    assert_eq!(scenario.flights.len(), 320);
    assert_eq!(scenario.sector.levels, 12);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("320 flights"), "stdout: {stdout}");
    assert!(stdout.contains("capacity 2000"), "stdout: {stdout}");
}

#[test]
fn generate_accepts_zero_flights() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(&["generate", "--flights", "0", "--out", "gen"], dir.path());
    assert!(out.status.success());
    let scenario: ScenarioFile = read_json(&dir.path().join("gen/scenario.json"));
    assert!(scenario.flights.is_empty());
}

#[test]
fn generate_rejects_non_dividing_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(&["generate", "--spacing", "7", "--out", "gen"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("does not evenly divide"), "stderr: {stderr}");
}

/// A two-flight scenario with no conflicts.
fn conflict_free_scenario() -> serde_json::Value {
    serde_json::json!({
        "sector": {"width": 54.0, "height": 64.8, "levels": 4, "t_start": 0.0, "t_end": 1.0},
        "flights": [
            {"id": "A", "entry": [0.0, 5.4], "exit": [54.0, 5.4], "release": 0.0, "speed": 533.0},
            {"id": "B", "entry": [0.0, 59.4], "exit": [54.0, 59.4], "release": 0.0, "speed": 533.0}
        ]
    })
}

#[test]
fn solve_conflict_free_scenario_exits_clean() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("scenario.json"),
        serde_json::to_string_pretty(&conflict_free_scenario()).unwrap(),
    )
    .unwrap();
    let out = crp(&["solve", "scenario.json", "--seed", "1", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let solution: SolutionFile = read_json(&dir.path().join("run/solution.json"));
    assert!(solution.unresolved.is_empty());
    assert_eq!(solution.iterations.len(), 1, "no iterations needed");
    assert!(solution.flights.iter().all(|f| f.theta_deg == 0.0 && f.extension == 1.0));

    let summary: SummaryFile = read_json(&dir.path().join("run/summary.json"));
    assert_eq!(summary.unresolved, solution.unresolved.len());
    assert!(summary.converged);
    assert_eq!(summary.iterations_used, 0);

    // Histograms total the flight count and concentrate on the zero bins.
    let angles = fs::read_to_string(dir.path().join("run/angle_histogram.csv")).unwrap();
    let mut zero_bin = 0usize;
    let mut total = 0usize;
    for line in angles.lines().skip(1) {
        let (start, count) = line.split_once(',').unwrap();
        let count: usize = count.parse().unwrap();
        total += count;
        if start.parse::<f64>().unwrap() == 0.0 {
            zero_bin = count;
        }
    }
    assert_eq!(total, 2);
    assert_eq!(zero_bin, 2);

    let exts = fs::read_to_string(dir.path().join("run/extension_histogram.csv")).unwrap();
    let ext_total: usize =
        exts.lines().skip(1).map(|l| l.split_once(',').unwrap().1.parse::<usize>().unwrap()).sum();
    assert_eq!(ext_total, 2);
    let first_bin = exts.lines().nth(1).unwrap();
    assert_eq!(first_bin, "1,2");
}

#[test]
fn solve_reports_partial_resolution_with_exit_code_two() {
    // Two flights crossing simultaneously on a single level cannot be
    // separated (stationary point), so the run must end partial.
    let scenario = serde_json::json!({
        "sector": {"width": 100.0, "height": 100.0, "levels": 1, "t_start": 0.0, "t_end": 1.0},
        "flights": [
            {"id": "A", "entry": [0.0, 50.0], "exit": [100.0, 50.0], "release": 0.0, "speed": 500.0},
            {"id": "B", "entry": [50.0, 0.0], "exit": [50.0, 100.0], "release": 0.0, "speed": 500.0}
        ]
    });
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), serde_json::to_string(&scenario).unwrap()).unwrap();
    let out = crp(&["solve", "s.json", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let solution: SolutionFile = read_json(&dir.path().join("run/solution.json"));
    assert_eq!(solution.unresolved, vec!["A".to_string(), "B".to_string()]);
}

#[test]
fn solve_rejects_invalid_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("scenario.json"),
        serde_json::to_string_pretty(&conflict_free_scenario()).unwrap(),
    )
    .unwrap();
    let out = crp(
        &["solve", "scenario.json", "--separation=-1", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid parameters"));
}

#[test]
fn report_summarizes_solution() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("scenario.json"),
        serde_json::to_string_pretty(&conflict_free_scenario()).unwrap(),
    )
    .unwrap();
    let solve = crp(&["solve", "scenario.json", "--out", "run"], dir.path());
    assert!(solve.status.success());
    let out = crp(&["report", "run/solution.json", "--out", "rep"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("flights:        2"), "stdout: {stdout}");
    assert!(dir.path().join("rep/angle_histogram.csv").exists());
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn small_batch_is_deterministic_and_row_complete() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "batch".to_string(),
            "--seed".into(),
            "5".into(),
            "--instances".into(),
            "3".into(),
            "--flights".into(),
            "60".into(),
            "--levels".into(),
            "4".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    let a1: Vec<&str> = Vec::new();
    drop(a1);
    let run1 = Command::new(env!("CARGO_BIN_EXE_crp"))
        .args(args("b1"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(
        run1.status.code() == Some(0) || run1.status.code() == Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&run1.stderr)
    );
    let run2 = Command::new(env!("CARGO_BIN_EXE_crp"))
        .args(args("b2"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(run1.status.code(), run2.status.code());

    let t1 = tree_bytes(&dir.path().join("b1"));
    let t2 = tree_bytes(&dir.path().join("b2"));
    assert_eq!(t1.len(), t2.len());
    for ((n1, b1), (n2, b2)) in t1.iter().zip(t2.iter()) {
        assert_eq!(n1, n2);
        assert_eq!(b1, b2, "file {n1} differs between identical runs");
    }

    let rows = fs::read_to_string(dir.path().join("b1/batch_instances.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4, "header + one row per instance");
    assert!(dir.path().join("b1/batch_unresolved.csv").exists());
    assert!(dir.path().join("b1/batch_conflicts.csv").exists());
}

#[test]
fn log_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_crp"))
        .args(["generate", "--flights", "5", "--out", "g"])
        .env("CD_LOG", "debug")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
}
