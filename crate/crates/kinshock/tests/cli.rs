use std::path::Path;
use std::process::Command;

use kinshock::output::{validate_manifest, MANIFEST_FILE};
use kinshock::pipeline::StageStatus;

fn kinshock(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kinshock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &std::process::Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn invalid_parameters_exit_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&kinshock(&["--s", "0.6", "--out", out])), 2);
    assert_eq!(code(&kinshock(&["--preset", "nope", "--out", out])), 2);
    assert_eq!(code(&kinshock(&["--stage-until", "nowhere", "--out", out])), 2);
    assert_eq!(code(&kinshock(&["--threads", "0", "--out", out])), 2);
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn unreadable_config_exits_with_io_status() {
    let out = kinshock(&["--config", "/nonexistent/kinshock.toml"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn staged_run_writes_a_valid_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "epsilon = 0.1\nstage_until = \"rh\"\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = kinshock(&[
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.05",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join(MANIFEST_FILE)).unwrap();
    let m = validate_manifest(&text).unwrap();
    assert_eq!(m.config.epsilon, 0.05);
    assert_eq!(m.stage("rh").unwrap().status, StageStatus::Ok);
    assert_eq!(m.stage("transport").unwrap().status, StageStatus::Skipped);
    assert!(!Path::new(&out_dir.join("profile.csv")).exists());
}

#[test]
fn unwritable_output_exits_with_io_status() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = kinshock(&["--stage-until", "rh", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}
