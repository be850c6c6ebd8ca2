use std::process::{Command, Output};

use chemovar::solver::{Classification, SolveReport};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemovar"))
        .args(args)
        .env("KS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_exit_codes() {
    let o = run(&["analyze", "--domain", "disk", "--res", "128", "--beta", "-5", "--rho", "13"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "guaranteed_nontrivial");
    assert_eq!((v["k"].as_u64(), v["i"].as_u64(), v["j"].as_u64()), (Some(1), Some(2), Some(2)));
    assert_eq!(v["homology_rank"], 1);

    let o = run(&["analyze", "--domain", "unit_square", "--beta", "1", "--rho", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["analyze", "--rho", "12.566370614"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "degenerate");
    assert_eq!(v["resonant"]["rho_quantized"], true);
}

#[test]
fn analyze_csv_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# disk run\ndomain = disk\nres = 64\nbeta = -5\nrho = 2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = run(&["analyze", "--config", cfg, "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("rho,2\n"));
    let o = run(&["analyze", "--config", cfg, "--rho", "13", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rho,13\n"));
    assert!(stdout(&o).contains("verdict,guaranteed_nontrivial\n"));
}

#[test]
fn spectrum_csv() {
    let o = run(&["spectrum", "--domain", "unit_square", "--res", "16", "--eigs", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,lambda");
    assert_eq!(lines.len(), 4);
    let l1: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((l1 / std::f64::consts::PI.powi(2) - 1.0).abs() < 0.02);
    assert!(lines.iter().skip(1).all(|l| l.split(',').nth(1).unwrap().len() <= 14));
}

#[test]
fn solve_coercive_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.json");
    let o = run(&["solve", "--domain", "unit_square", "--res", "12", "--beta", "1", "--rho", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(&out).unwrap();
    let report: SolveReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.solutions.len(), 1);
    assert_eq!(report.solutions[0].classification, Classification::Trivial);
    let again: SolveReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
}

#[test]
fn solve_finds_nontrivial_solution() {
    let o = run(&["solve", "--domain", "disk", "--res", "64", "--beta", "1", "--rho", "13", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("index,classification,energy"));
    assert!(text.lines().any(|l| l.split(',').nth(1) == Some("nontrivial")));
}

#[test]
fn solve_bad_mesh_path() {
    let o = run(&["solve", "--mesh", "/no/such/mesh.txt"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/mesh.txt"));
}

#[test]
fn probe_boundary_slope_passes() {
    let o = run(&["probe", "--domain", "unit_square", "--res", "32", "--probe", "dirichlet_slope"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,dirichlet,mean,logint,energy");
    assert_eq!(lines.len(), 6);
    let last = lines[5];
    assert!(last.starts_with("slope ") && last.ends_with(" PASS"), "{last}");
    assert!(last.contains("expected 50.2654824574"));
}

#[test]
fn probe_pure_tail_has_no_bubble_slope() {
    let o = run(&["probe", "--domain", "disk", "--res", "32", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let last = stdout(&o).lines().last().unwrap().to_string();
    let slope: f64 = last.split(' ').nth(1).unwrap().parse().unwrap();
    assert!(slope.abs() < 0.1 * 16.0 * std::f64::consts::PI, "{last}");
}

#[test]
fn probe_statistics_pass() {
    for probe in ["mt", "exp_lower", "l2_upper"] {
        let o = run(&["probe", "--domain", "disk", "--res", "32", "--probe", probe, "--t", "0.5"]);
        assert_eq!(o.status.code(), Some(0), "{probe}");
        assert!(stdout(&o).trim_end().ends_with("PASS"));
    }
}

#[test]
fn probe_underresolved_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("m.txt");
    let coarse = chemovar::domain::build_builtin(chemovar::Builtin::UnitSquare, 4).unwrap();
    std::fs::write(&mesh, chemovar::domain::write_mesh(&coarse)).unwrap();
    // the grading only reaches the probe atoms, so a huge Λ still fails
    let o = run(&["probe", "--mesh", mesh.to_str().unwrap(), "--lambda-grid", "10,1e9"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn continuation_trivial_and_quantized() {
    let o = run(&[
        "continuation", "--domain", "unit_square", "--res", "12", "--beta", "1", "--rho", "1", "--rho-end", "5", "--steps", "4",
        "--trivial",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("trivial")));

    let o = run(&[
        "continuation", "--domain", "disk", "--res", "32", "--beta", "1", "--rho", "10", "--rho-end", "14", "--steps", "8",
        "--trivial",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("4πN"));
}

#[test]
fn bad_threads_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_chemovar"))
        .args(["spectrum"])
        .env("KS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}
