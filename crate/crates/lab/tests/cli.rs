//! Black-box tests of the `zerolab` binary: flag handling, config schema
//! enforcement, exit codes and artifact layout.

use std::path::Path;
use std::process::{Command, Output};

fn zerolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zerolab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = zerolab(&[]);
    assert_eq!(exit_code(&out), 2, "{}", stderr(&out));
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.conf");
    std::fs::write(&cfg, "frobnicate = 1\n").unwrap();
    let out = zerolab(&["equidist", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("unknown config key"), "{}", stderr(&out));
}

#[test]
fn malformed_degree_list_exits_two() {
    let out = zerolab(&["equidist", "--degrees", "8,banana"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("banana"), "{}", stderr(&out));
    let out = zerolab(&["equidist", "--degrees", "16,8", "--samples", "1"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("ascending"), "{}", stderr(&out));
}

#[test]
fn tiny_equidist_run_writes_the_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = zerolab(&[
        "equidist",
        "--degrees",
        "2",
        "--samples",
        "1",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.join("equidist.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n,sample_id,stream_index,pairing_one,"), "{header}");
    assert_eq!(lines.count(), 1, "exactly one data row");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("equidist.json")).unwrap())
            .unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["total_rows"], 1);
    assert_eq!(json["degrees"][0]["n"], 2);
    assert!(out_dir.join("medians_discrepancy.dat").exists());
}

fn read_artifacts(dir: &Path) -> (String, String) {
    (
        std::fs::read_to_string(dir.join("equidist.csv")).unwrap(),
        std::fs::read_to_string(dir.join("equidist.json")).unwrap(),
    )
}

#[test]
fn same_seed_reproduces_bytes_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (one, eight) = (dir.path().join("one"), dir.path().join("eight"));
    let base = ["equidist", "--degrees", "3,5", "--samples", "8", "--seed", "99"];
    let mut args_one: Vec<&str> = base.to_vec();
    args_one.extend(["--workers", "1", "--out", one.to_str().unwrap()]);
    let mut args_eight: Vec<&str> = base.to_vec();
    args_eight.extend(["--workers", "8", "--out", eight.to_str().unwrap()]);
    assert_eq!(exit_code(&zerolab(&args_one)), 0);
    assert_eq!(exit_code(&zerolab(&args_eight)), 0);
    assert_eq!(read_artifacts(&one), read_artifacts(&eight));
}

#[test]
fn config_file_drives_a_perturbed_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.conf");
    std::fs::write(
        &cfg,
        "degrees = 3\n\
         samples = 4\n\
         measure = perturbed\n\
         potential = softmax:0.2\n\
         epsilon = 1e-6\n\
         burn_in = 20\n\
         thin = 2\n\
         seed = 5\n",
    )
    .unwrap();
    let out = zerolab(&["equidist", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("perturbed:softmax:0.2"), "{text}");
    // flat target at tiny ε: the acceptance-rate warning must surface
    assert!(text.contains("warning"), "{text}");
}

#[test]
fn rate_subcommand_reports_the_fit() {
    let out = zerolab(&[
        "rate",
        "--degrees",
        "8,16,32,64",
        "--samples",
        "12",
        "--seed",
        "3",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("slope="), "{text}");
    assert!(text.contains("log-log linear"), "{text}");
}

#[test]
fn rate_needs_at_least_four_degrees() {
    let out = zerolab(&["rate", "--degrees", "8,16,32", "--samples", "5"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("at least 4"), "{}", stderr(&out));
}

#[test]
fn exceptional_subcommand_judges_decay() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = zerolab(&[
        "exceptional",
        "--degrees",
        "4,8,16",
        "--samples",
        "60",
        "--seed",
        "12",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("calibrated A"), "{text}");
    assert!(text.contains("fraction"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("exceptional.json")).unwrap())
            .unwrap();
    assert_eq!(json["kind"], "exceptional");
    let decaying = json["payload"]["decaying"].as_bool().unwrap();
    assert_eq!(exit_code(&out), i32::from(!decaying), "verdict and exit code agree");
}

#[test]
fn covering_subcommand_passes_quickly() {
    let out = zerolab(&["covering"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("[PASS] covering bound"), "{text}");
    assert!(text.contains("k = 7"), "{text}");
}

#[test]
fn holder_subcommand_respects_sample_override() {
    let out = zerolab(&["holder", "--samples", "2000", "--seed", "4"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("2000 pairs"), "{text}");
    assert!(text.contains("[PASS]"), "{text}");
}

#[test]
fn moderate_subcommand_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = zerolab(&[
        "moderate",
        "--samples",
        "2000",
        "--seed",
        "6",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("uniform bound"), "{text}");
    assert!(text.contains("perturbed bound"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("moderate.json")).unwrap())
            .unwrap();
    assert_eq!(json["kind"], "moderate");
    assert!(json["payload"]["pass"].as_bool().unwrap());
}
