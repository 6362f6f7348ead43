//! The `vfog` binary: commands, files and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn vfog(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfog"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn generate_solve_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gen = vfog(&["generate", "--seed", "4", "--packages-per-vehicle", "3", "--out", "i.toml"], dir.path());
    assert_eq!(gen.status.code(), Some(0), "{}", text(&gen.stderr));

    let solve = vfog(&["solve", "--instance", "i.toml", "--solver", "exact", "--out", "a.csv"], dir.path());
    assert_eq!(solve.status.code(), Some(0), "{}", text(&solve.stderr));
    let report = text(&solve.stdout);
    assert!(report.contains("optimal=true"), "{report}");
    let assignment = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(assignment.lines().count(), 50);
    assert!(assignment.lines().all(|l| l.ends_with(",cloud") || l.contains(",vehicle:")));

    let eval = vfog(&["evaluate", "--instance", "i.toml", "--assignment", "a.csv"], dir.path());
    assert_eq!(eval.status.code(), Some(0), "{}", text(&eval.stderr));
    let total = |s: &str| s.lines().find(|l| l.starts_with("total_power_w=")).map(str::to_owned);
    assert_eq!(total(&text(&eval.stdout)), total(&report));
    assert!(text(&eval.stdout).contains("violations=0"));

    // Repeated runs write identical files.
    vfog(&["generate", "--seed", "4", "--packages-per-vehicle", "3", "--out", "j.toml"], dir.path());
    assert_eq!(
        std::fs::read(dir.path().join("i.toml")).unwrap(),
        std::fs::read(dir.path().join("j.toml")).unwrap()
    );
}

#[test]
fn evaluate_flags_a_broken_assignment() {
    let dir = tempfile::tempdir().unwrap();
    vfog(&["generate", "--requests", "2", "--vehicles", "1", "--out", "i.toml"], dir.path());
    std::fs::write(dir.path().join("a.csv"), "0,vehicle:0\n1,vehicle:0\n").unwrap();
    let eval = vfog(&["evaluate", "--instance", "i.toml", "--assignment", "a.csv"], dir.path());
    assert_eq!(eval.status.code(), Some(2));
    assert!(text(&eval.stderr).contains("violation"));
    std::fs::write(dir.path().join("b.csv"), "0,cloud\n").unwrap();
    let short = vfog(&["evaluate", "--instance", "i.toml", "--assignment", "b.csv"], dir.path());
    assert_eq!(short.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let overloaded = vfog(&["solve", "--alpha", "0.05"], dir.path());
    assert_eq!(overloaded.status.code(), Some(2));
    assert!(text(&overloaded.stderr).contains("infeasible"));

    let brute = vfog(&["solve", "--solver", "brute"], dir.path());
    assert_eq!(brute.status.code(), Some(1));
    assert!(text(&brute.stderr).contains("exceeds the node budget"));

    let bad = vfog(&["solve", "--solver", "frobnicate"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let err = text(&bad.stderr);
    assert!(err.contains("exact") && err.contains("greedy") && err.contains("brute"), "{err}");

    assert_eq!(vfog(&["solve", "--frob"], dir.path()).status.code(), Some(1));
    assert_eq!(vfog(&[], dir.path()).status.code(), Some(1));
    assert_eq!(vfog(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(vfog(&["--version"], dir.path()).status.code(), Some(0));
    assert_eq!(vfog(&["solve", "--packages-per-vehicle", "11"], dir.path()).status.code(), Some(1));
    assert_eq!(vfog(&["solve", "--instance", "missing.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn zero_time_budget_reports_unproven_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = vfog(&["solve", "--time-budget-s", "0"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[scenario]\nseed = 9\nrequest_count = 12\n\n[cloud]\nserver_count = 6\n",
    )
    .unwrap();
    let out = vfog(&["show-config", "--config", "c.toml", "--requests", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let resolved: toml::Table = text(&out.stdout).parse().unwrap();
    let scenario = resolved["scenario"].as_table().unwrap();
    assert_eq!(scenario["seed"].as_integer(), Some(9));
    assert_eq!(scenario["request_count"].as_integer(), Some(7));
    assert_eq!(scenario["vehicle_count"].as_integer(), Some(20));
    assert_eq!(resolved["cloud"]["server_count"].as_integer(), Some(6));

    std::fs::write(dir.path().join("bad.toml"), "[scenario]\nfrobs = 1\n").unwrap();
    assert_eq!(vfog(&["show-config", "--config", "bad.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn sweep_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--k", "0..3", "--seeds", "2", "--requests", "12", "--vehicles", "5", "--jobs", "2", "--out",
        "r.csv", "--summary", "s.csv",
    ];
    let out = vfog(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let rows = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 2);
    assert!(rows.starts_with("k,seed,total_power_w,"));
    let summary = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4 * 3);

    vfog(&args, dir.path());
    assert_eq!(rows, std::fs::read_to_string(dir.path().join("r.csv")).unwrap());
}
