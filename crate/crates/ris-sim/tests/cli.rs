//! Black-box tests of the `ris-sim` binary: subcommands, config plumbing,
//! CSV outputs, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

const CSV_HEADER: &str = "scenario,mode,total_power_dbm,mean_se,stderr,drops,seed";
const DECISION_HEADER: &str = "index,tx_power_dbm,class,tau_db,rho_db,mode";

/// A scene small enough that every invocation finishes in milliseconds.
const TINY: &[&str] = &[
    "--set",
    "num_users=2",
    "--set",
    "num_bs_antennas=2",
    "--set",
    "num_ris_elements=8",
    "--set",
    "drops=2",
    "--set",
    "power_grid_dbm=30,40",
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-sim"))
}

fn run_tiny(subcommand: &str, extra: &[&str]) -> Output {
    bin()
        .arg(subcommand)
        .arg("--defaults")
        .args(TINY)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .expect("output file readable")
        .lines()
        .map(str::to_owned)
        .collect()
}

// ====================================================================
// Success paths
// ====================================================================

#[test]
fn sweep_writes_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run_tiny(
        "sweep",
        &[
            "--set",
            "modes=noris,passive",
            "--out",
            out_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "stderr: {:?}", out.stderr);
    assert!(stdout_of(&out).contains("wrote 8 rows"));

    let lines = read_lines(&out_path);
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 9, "2 scenarios x 2 modes x 2 powers + header");
    assert!(lines[1].starts_with("strong_direct,noris,30,"));
}

#[test]
fn sweep_is_byte_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let out = run_tiny(
            "sweep",
            &["--set", "modes=passive", "--seed", "5", "--out", p.to_str().unwrap()],
        );
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(&paths[0]).unwrap(),
        std::fs::read(&paths[1]).unwrap()
    );
}

#[test]
fn point_prints_the_operating_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("point.csv");
    let out = run_tiny(
        "point",
        &[
            "--set",
            "modes=noris",
            "--seed",
            "9",
            "--out",
            out_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("scenario=strong_direct mode=noris total_power_dbm=30"));
    assert!(text.contains("drops=2 seed=9"));
    assert_eq!(read_lines(&out_path).len(), 2, "header plus one row");
}

#[test]
fn hybrid_writes_results_and_decision_log() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("h.csv");
    let out = run_tiny(
        "hybrid",
        &[
            "--set",
            "modes=noris",
            "--set",
            "power_grid_dbm=30,65",
            "--out",
            out_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "stderr: {:?}", out.stderr);

    let rows = read_lines(&out_path);
    assert_eq!(rows[0], CSV_HEADER);
    assert_eq!(rows.len(), 9, "2 scenarios x (noris+hybrid) x 2 powers + header");

    let decisions = read_lines(&dir.path().join("h_decisions.csv"));
    assert_eq!(decisions[0], DECISION_HEADER);
    assert_eq!(decisions.len(), 9, "2 scenarios x 2 powers x 2 drops + header");
    assert!(decisions[1].starts_with("0,30,"));
}

#[test]
fn validate_reports_all_checks_green() {
    let out = bin().arg("validate").output().expect("binary runs");
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("all 9 checks passed"), "stdout: {text}");
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn config_file_applies_and_set_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "num_users = 2\n\
         num_bs_antennas = 2\n\
         num_ris_elements = 8\n\
         drops = 3\n\
         power_grid_dbm = [30.0]\n\
         modes = [\"noris\"]\n",
    )
    .unwrap();
    let out_path = dir.path().join("from_file.csv");
    let out = bin()
        .args(["sweep", "--config", cfg_path.to_str().unwrap()])
        .args(["--set", "drops=1", "--out", out_path.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "stderr: {:?}", out.stderr);

    let lines = read_lines(&out_path);
    assert_eq!(lines.len(), 3, "file grid/mode kept: 2 scenarios x 1 x 1");
    assert!(
        lines[1].ends_with(",1,1"),
        "--set drops=1 beats the file's drops=3: {}",
        lines[1]
    );
}

// ====================================================================
// Failure paths and exit codes
// ====================================================================

#[test]
fn missing_config_source_exits_1() {
    let out = bin().arg("sweep").output().expect("binary runs");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn nonexistent_config_path_exits_1() {
    let out = bin()
        .args(["sweep", "--config", "/nonexistent/run.toml"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_set_key_exits_1() {
    let out = run_tiny("sweep", &["--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn malformed_set_exits_1() {
    let out = run_tiny("sweep", &["--set", "drops"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_value_exits_1() {
    let out = run_tiny("sweep", &["--set", "num_users=0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_path_exits_2() {
    let out = run_tiny(
        "sweep",
        &[
            "--set",
            "modes=noris",
            "--out",
            "/nonexistent_dir_93042/out.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}
