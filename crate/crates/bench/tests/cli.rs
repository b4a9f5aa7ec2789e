//! End-to-end CLI checks through the built binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_almton-bench"))
}

#[test]
fn grid_profile_pipeline_produces_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let grid_csv = dir.path().join("grid.csv");
    let out = bin()
        .args([
            "grid",
            "--problem",
            "two-well",
            "--solvers",
            "damped-newton,newton-cg",
            "--nx",
            "3",
            "--ny",
            "3",
            "--out",
        ])
        .arg(&grid_csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&grid_csv).unwrap();
    assert!(text.starts_with("problem,start_0,start_1,solver"));
    assert_eq!(text.lines().count(), 1 + 3 * 3 * 2);

    let prof_csv = dir.path().join("prof.csv");
    let prof_svg = dir.path().join("prof.svg");
    let out = bin()
        .arg("profile")
        .arg("--input")
        .arg(&grid_csv)
        .arg("--out-csv")
        .arg(&prof_csv)
        .arg("--out-svg")
        .arg(&prof_svg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&prof_svg).unwrap();
    assert!(svg.starts_with("<svg xmlns="));
    assert!(svg.ends_with("</svg>"));
    assert!(std::fs::read_to_string(&prof_csv)
        .unwrap()
        .starts_with("solver,tau,rho"));
}

#[test]
fn grid_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = bin()
            .args([
                "grid",
                "--problem",
                "two-well",
                "--solvers",
                "newton-cg,almton-simple",
                "--nx",
                "3",
                "--ny",
                "3",
                "--out",
            ])
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.conf");
    std::fs::write(&cfg, "nx = 3\nny = 3\nsolvers = newton-cg\nbudget = 50\n").unwrap();
    let out_csv = dir.path().join("g.csv");
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["grid", "--problem", "two-well", "--ny", "2", "--out"])
        .arg(&out_csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // nx from config (3), ny overridden by flag (2), one solver.
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}

#[test]
fn configuration_errors_exit_nonzero() {
    let out = bin()
        .args(["grid", "--problem", "no-such-problem"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = bin()
        .args(["grid", "--problem", "two-well", "--solvers", "bogus"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "not a key value line\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["grid", "--problem", "two-well"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn audit_appends_machine_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("audit.csv");
    let out = bin()
        .args(["audit", "--problem", "two-well", "--starts", "2", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().any(|l| l.starts_with("#audit,")));
    // The appended rows do not break record parsing.
    let records = almton_bench::emit::records_from_csv(&text).unwrap();
    assert_eq!(records.len(), 2);
}

#[test]
fn check_derivs_reports_all_orders() {
    let out = bin()
        .args(["check-derivs", "--problem", "rosenbrock2", "--points", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rosenbrock2"));
    assert!(stdout.contains("[ok]"), "{stdout}");
}
