//! Result files of a run and the manifest schema check.
//!
//! `profile.csv` has one row per grid node. The kinetic columns are empty
//! when the run stopped before the fixed point. `history.csv` has one row per
//! outer iteration. `manifest.json` is byte-stable for a fixed configuration
//! and build; `runtime.json` holds timings and other run-dependent facts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::STAGES;
use crate::hermite::HermiteIndexSet;
use crate::pipeline::{
    moments, FileSchema, RunManifest, RunOutcome, StageStatus, MANIFEST_SCHEMA, MANIFEST_VERSION,
};

pub const PROFILE_FILE: &str = "profile.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RUNTIME_FILE: &str = "runtime.json";
pub const TABLE_VERSION: u32 = 1;

const PROFILE_COLUMNS: [&str; 14] = [
    "x", "rho", "u", "T", "drho_dx", "du_dx", "dT_dx", "F_rho", "F_u", "F_T", "residual", "f_perp", "f",
    "deviation",
];

const HISTORY_COLUMNS: [&str; 7] = [
    "iteration",
    "step_norm",
    "ratio",
    "solution_norm",
    "phase_value",
    "linear_residual",
    "source_norm",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("cannot serialize manifest: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn file_schemas() -> Vec<FileSchema> {
    vec![
        FileSchema {
            file: PROFILE_FILE.into(),
            version: TABLE_VERSION,
            columns: PROFILE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        },
        FileSchema {
            file: HISTORY_FILE.into(),
            version: TABLE_VERSION,
            columns: HISTORY_COLUMNS.iter().map(|s| s.to_string()).collect(),
        },
    ]
}

/// One row of `profile.csv`; field order matches the declared columns.
#[derive(Clone, Debug, Serialize)]
struct ProfileRow {
    x: f64,
    rho: f64,
    u: f64,
    #[serde(rename = "T")]
    t: f64,
    drho_dx: f64,
    du_dx: f64,
    #[serde(rename = "dT_dx")]
    dt_dx: f64,
    #[serde(rename = "F_rho")]
    f_rho: Option<f64>,
    #[serde(rename = "F_u")]
    f_u: Option<f64>,
    #[serde(rename = "F_T")]
    f_t: Option<f64>,
    residual: Option<f64>,
    f_perp: Option<f64>,
    f: Option<f64>,
    deviation: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EmittedFiles {
    pub manifest: PathBuf,
    pub runtime: PathBuf,
    pub profile: Option<PathBuf>,
    pub history: Option<PathBuf>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Manifest as pretty-printed JSON with a trailing newline.
pub fn manifest_json(manifest: &RunManifest) -> Result<String, OutputError> {
    let mut s = serde_json::to_string_pretty(manifest)?;
    s.push('\n');
    Ok(s)
}

/// Writes every available artifact of `outcome` into `dir`, creating it.
pub fn emit_results(outcome: &RunOutcome, dir: &Path) -> Result<EmittedFiles, OutputError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let manifest = dir.join(MANIFEST_FILE);
    fs::write(&manifest, manifest_json(&outcome.manifest)?).map_err(io(&manifest))?;
    let runtime = dir.join(RUNTIME_FILE);
    let mut rt = serde_json::to_string_pretty(&outcome.runtime)?;
    rt.push('\n');
    fs::write(&runtime, rt).map_err(io(&runtime))?;

    let profile = match &outcome.profile {
        Some(p) => {
            let path = dir.join(PROFILE_FILE);
            let set = crate::hermite::build_index_set(outcome.manifest.config.order).ok();
            let rows = profile_rows(outcome, p, set.as_ref());
            let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            for row in rows {
                w.serialize(row).map_err(csv_err(&path))?;
            }
            w.flush().map_err(io(&path))?;
            Some(path)
        }
        None => None,
    };
    let history = match &outcome.iteration {
        Some(state) => {
            let path = dir.join(HISTORY_FILE);
            let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            for rec in &state.history {
                w.serialize(rec).map_err(csv_err(&path))?;
            }
            w.flush().map_err(io(&path))?;
            Some(path)
        }
        None => None,
    };
    Ok(EmittedFiles {
        manifest,
        runtime,
        profile,
        history,
    })
}

fn profile_rows(
    outcome: &RunOutcome,
    p: &crate::ns_shock::NSProfile,
    set: Option<&HermiteIndexSet>,
) -> Vec<ProfileRow> {
    (0..p.grid.len())
        .map(|i| {
            let st = p.states[i];
            let d = p.derivative[i];
            let fm = match (&outcome.shock, set) {
                (Some(sh), Some(set)) => moments(&sh.coeffs[i], set),
                _ => None,
            };
            let deviation = match (&outcome.shock, &outcome.background) {
                (Some(sh), Some(bg)) => Some((&sh.coeffs[i] - &bg.maxwellian[i]).norm()),
                _ => None,
            };
            ProfileRow {
                x: p.grid[i],
                rho: st.rho,
                u: st.u,
                t: st.t,
                drho_dx: d[0],
                du_dx: d[1],
                dt_dx: d[2],
                f_rho: fm.map(|v| v.rho),
                f_u: fm.map(|v| v.u),
                f_t: fm.map(|v| v.t),
                residual: outcome.residual.as_ref().map(|r| r.per_node[i]),
                f_perp: outcome.background.as_ref().map(|b| b.f_perp[i].norm()),
                f: outcome.iteration.as_ref().map(|s| s.f[i].norm()),
                deviation,
            }
        })
        .collect()
}

/// Parses a manifest and checks its structural invariants: schema and
/// version, every stage present in order, reasons on failed and skipped
/// stages, nothing run after a failure, and a failure entry that names the
/// failed stage.
pub fn validate_manifest(text: &str) -> Result<RunManifest, Vec<String>> {
    let m: RunManifest = serde_json::from_str(text).map_err(|e| vec![format!("not a manifest: {e}")])?;
    let mut errs = Vec::new();
    if m.schema != MANIFEST_SCHEMA {
        errs.push(format!("schema is '{}', expected '{MANIFEST_SCHEMA}'", m.schema));
    }
    if m.version != MANIFEST_VERSION {
        errs.push(format!("version {} is not supported", m.version));
    }
    let names: Vec<&str> = m.stages.iter().map(|s| s.name.as_str()).collect();
    if names != STAGES {
        errs.push(format!("stages {names:?} differ from {STAGES:?}"));
    }
    let mut halted = false;
    let mut failed: Vec<&str> = Vec::new();
    for s in &m.stages {
        match s.status {
            StageStatus::Ok => {
                if halted {
                    errs.push(format!("stage '{}' ran after the run halted", s.name));
                }
                if s.report.is_null() {
                    errs.push(format!("stage '{}' has no report", s.name));
                }
            }
            StageStatus::Failed => {
                failed.push(&s.name);
                halted = true;
                if s.reason.is_none() {
                    errs.push(format!("failed stage '{}' has no reason", s.name));
                }
            }
            StageStatus::Skipped => {
                halted = true;
                if s.reason.is_none() {
                    errs.push(format!("skipped stage '{}' has no reason", s.name));
                }
            }
        }
    }
    match (&m.failure, failed.as_slice()) {
        (None, []) => {}
        (Some(f), [name]) if f.stage == *name => {}
        (f, names) => errs.push(format!(
            "failure entry {:?} inconsistent with failed stages {names:?}",
            f.as_ref().map(|f| &f.stage)
        )),
    }
    let expected = file_schemas();
    if m.files != expected {
        errs.push("file schemas differ from this build".into());
    }
    if errs.is_empty() {
        Ok(m)
    } else {
        Err(errs)
    }
}
