//! End-to-end runs of the binary: exit codes, CSV shapes, determinism,
//! and config-file precedence.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ballschwarz"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ballschwarz-cli-{}-{name}", std::process::id()));
    p
}

#[test]
fn indicators_reference_chain_run() {
    // light budget keeps this quick; d_F only needs the fatness sweep
    let out = run(&[
        "indicators",
        "--geometry",
        "chain:8,1,0.9",
        "--mc-samples",
        "20000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let row = lines.next().unwrap();
    assert!(lines.next().is_none(), "expected exactly one data row");
    let cols: Vec<&str> = header.split(',').collect();
    let vals: Vec<&str> = row.split(',').collect();
    assert_eq!(cols.len(), vals.len());
    let d_f: f64 = vals[cols.iter().position(|c| *c == "d_F").unwrap()]
        .parse()
        .unwrap();
    assert!((d_f - 7.2).abs() < 0.72, "d_F = {d_f}");
    let n_max: usize = vals[cols.iter().position(|c| *c == "n_max").unwrap()]
        .parse()
        .unwrap();
    assert_eq!(n_max, 3);
}

#[test]
fn identical_seeds_reproduce_identical_csv() {
    let args = [
        "indicators",
        "--geometry",
        "chain:3,1,0.9",
        "--h",
        "0.2",
        "--mc-samples",
        "5000",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn solve_round_trip_reports_convergence() {
    let out = run(&[
        "solve",
        "--geometry",
        "lattice:2,2,2,0.9",
        "--method",
        "gmres-ms",
        "--tol",
        "1e-8",
        "--h",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("gmres-ms,"));
    assert!(row.ends_with(",true"), "row: {row}");
}

#[test]
fn sweep_emits_complete_rows() {
    let out = run(&[
        "sweep", "--case", "1", "--n", "2,3", "--h", "0.3", "--tol", "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "geometry,M,method,h,tol,iterations,rho,d_F,n_0,n_max,s0_bound,converged"
    );
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 12, "row: {row}");
        assert!(row.ends_with(",true"), "row: {row}");
    }
}

#[test]
fn verify_passes_on_two_ball_fixture() {
    let out = run(&[
        "verify",
        "--geometry",
        "chain:2,1,0.9",
        "--mc-samples",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("PASS pou-sum"));
    assert!(text.contains("PASS cone-pointwise-bound"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn eig_reports_spectral_floor() {
    let out = run(&[
        "eig",
        "--geometry",
        "chain:1,1,1.0",
        "--h",
        "0.25",
        "--mc-samples",
        "4000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("PASS eigenvalue-floor"));
}

#[test]
fn csv_flag_writes_file_instead_of_stdout() {
    let path = temp_path("sweep.csv");
    let out = run(&[
        "sweep",
        "--case",
        "1",
        "--n",
        "2",
        "--h",
        "0.3",
        "--tol",
        "1e-6",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("geometry,"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn flags_override_config_file_over_defaults() {
    let cfg = temp_path("settings.cfg");
    std::fs::write(
        &cfg,
        "# sweep defaults\nh = 0.35\nmc_samples = 4000\nseed = 3\n",
    )
    .unwrap();
    let base = [
        "indicators",
        "--geometry",
        "chain:2,1,0.9",
        "--config",
        cfg.to_str().unwrap(),
    ];
    // config alone
    let from_config = run(&base);
    assert_eq!(from_config.status.code(), Some(0));
    // flag overrides the config's h
    let mut with_flag = base.to_vec();
    with_flag.extend(["--h", "0.2"]);
    let overridden = run(&with_flag);
    assert_eq!(overridden.status.code(), Some(0));
    assert_ne!(from_config.stdout, overridden.stdout);
    // same override expressed purely via flags matches
    let pure_flags = run(&[
        "indicators",
        "--geometry",
        "chain:2,1,0.9",
        "--h",
        "0.2",
        "--mc-samples",
        "4000",
        "--seed",
        "3",
    ]);
    assert_eq!(pure_flags.stdout, overridden.stdout);
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["solve"]).status.code(), Some(2));
    assert_eq!(
        run(&["solve", "--geometry", "lattice:2,2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["solve", "--geometry", "no-such-file.xyzr"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["sweep", "--case", "7", "--n", "2"]).status.code(),
        Some(2)
    );
    let bad_cfg = temp_path("bad.cfg");
    std::fs::write(&bad_cfg, "frobnication = 9\n").unwrap();
    let out = run(&[
        "indicators",
        "--geometry",
        "chain:2,1,0.9",
        "--config",
        bad_cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
    std::fs::remove_file(&bad_cfg).ok();
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--help"]).status.code(), Some(0));
}
