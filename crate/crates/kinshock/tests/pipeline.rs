mod common;

use std::path::Path;

use common::cache_path;
use kinshock::config::{RunConfig, Tolerances, STAGES};
use kinshock::fluid::rh_solve;
use kinshock::output::{emit_results, validate_manifest, HISTORY_FILE, MANIFEST_FILE, PROFILE_FILE, RUNTIME_FILE};
use kinshock::pipeline::{run_pipeline, FailureKind, RunOutcome, StageStatus};

fn config(out: &Path) -> RunConfig {
    common::tensor(3);
    RunConfig {
        cache: Some(cache_path(3)),
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn run(c: &RunConfig) -> RunOutcome {
    run_pipeline(c, Some(2)).expect("valid configuration")
}

#[test]
fn full_run_writes_consistent_tables() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path());
    let outcome = run(&c);
    assert_eq!(outcome.manifest.exit_code(), 0);
    assert!(outcome.manifest.stages.iter().all(|s| s.status == StageStatus::Ok));
    for (name, ok) in &outcome.manifest.checks {
        assert!(ok, "check {name} failed");
    }
    assert_eq!(outcome.runtime.cache_hit, Some(true));

    let files = emit_results(&outcome, dir.path()).unwrap();
    let text = std::fs::read_to_string(&files.manifest).unwrap();
    let manifest = validate_manifest(&text).unwrap();
    assert_eq!(manifest, outcome.manifest);
    assert!(!text.contains("seconds"));
    let runtime: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(RUNTIME_FILE)).unwrap()).unwrap();
    assert_eq!(runtime["timings"].as_array().unwrap().len(), STAGES.len());

    let mut rdr = csv::Reader::from_path(dir.path().join(PROFILE_FILE)).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, manifest.files[0].columns);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), c.grid);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rh = rh_solve(kinshock::fluid::HydroState::REFERENCE, c.epsilon).unwrap();
    let value = |row: &csv::StringRecord, name: &str| row[col(name)].parse::<f64>().unwrap();
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    for (row, v) in [(first, rh.v_minus), (last, rh.v_plus)] {
        assert!((value(row, "F_rho") - v.rho).abs() <= 1e-4);
        assert!((value(row, "F_u") - v.u).abs() <= 1e-4);
        assert!((value(row, "F_T") - v.t).abs() <= 1e-4);
    }

    let history = csv::Reader::from_path(dir.path().join(HISTORY_FILE))
        .unwrap()
        .records()
        .count();
    assert_eq!(history, outcome.iteration.as_ref().unwrap().iterations);
}

#[test]
fn stage_until_skips_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig {
        stage_until: Some("profile".into()),
        ..config(dir.path())
    };
    let outcome = run(&c);
    assert_eq!(outcome.manifest.exit_code(), 0);
    let statuses: Vec<StageStatus> = outcome.manifest.stages.iter().map(|s| s.status).collect();
    assert_eq!(&statuses[..4], &[StageStatus::Ok; 4]);
    assert_eq!(&statuses[4..], &[StageStatus::Skipped; 4]);
    let files = emit_results(&outcome, dir.path()).unwrap();
    assert!(files.profile.is_some() && files.history.is_none());
    let mut rdr = csv::Reader::from_path(dir.path().join(PROFILE_FILE)).unwrap();
    let first = rdr.records().next().unwrap().unwrap();
    assert_eq!(&first[7], "");
    validate_manifest(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
}

#[test]
fn numerical_failure_halts_downstream_stages() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig {
        tolerances: Tolerances {
            fixed_point: 1e-10,
            max_iterations: 1,
        },
        ..config(dir.path())
    };
    let outcome = run(&c);
    let failure = outcome.manifest.failure.clone().unwrap();
    assert_eq!((failure.stage.as_str(), failure.kind), ("fixedpoint", FailureKind::Numerical));
    assert_eq!(outcome.manifest.exit_code(), 3);
    assert_eq!(outcome.manifest.stage("residual").unwrap().status, StageStatus::Skipped);
    emit_results(&outcome, dir.path()).unwrap();
    validate_manifest(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
}

#[test]
fn unusable_cache_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig {
        cache: Some(dir.path().to_path_buf()),
        stage_until: Some("rh".into()),
        ..config(dir.path())
    };
    let outcome = run(&c);
    let failure = outcome.manifest.failure.clone().unwrap();
    assert_eq!((failure.stage.as_str(), failure.kind), ("tensor", FailureKind::Io));
    assert_eq!(outcome.manifest.exit_code(), 4);
    assert!(outcome.manifest.stages[1..].iter().all(|s| s.status == StageStatus::Skipped));
}

#[test]
fn invalid_configurations_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_pipeline(&config(dir.path()), Some(0)).is_err());
    let bad = RunConfig {
        grid: 800,
        ..config(dir.path())
    };
    assert!(run_pipeline(&bad, None).is_err());
}

#[test]
fn tampered_manifests_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig {
        stage_until: Some("rh".into()),
        ..config(dir.path())
    };
    let outcome = run(&c);
    let text = kinshock::output::manifest_json(&outcome.manifest).unwrap();
    assert!(validate_manifest(&text).is_ok());

    let mut m = outcome.manifest.clone();
    m.stages.swap(0, 1);
    let errs = validate_manifest(&kinshock::output::manifest_json(&m).unwrap()).unwrap_err();
    assert!(errs.iter().any(|e| e.contains("differ")));

    let mut m = outcome.manifest.clone();
    m.stages[2].reason = None;
    assert!(validate_manifest(&kinshock::output::manifest_json(&m).unwrap()).is_err());

    let mut m = outcome.manifest.clone();
    m.stages[3].status = StageStatus::Ok;
    assert!(validate_manifest(&kinshock::output::manifest_json(&m).unwrap()).is_err());

    assert!(validate_manifest(&text.replace("kinshock-manifest", "other")).is_err());
    assert!(validate_manifest("{}").is_err());
}
