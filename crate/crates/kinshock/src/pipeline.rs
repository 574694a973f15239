//! Stage-by-stage orchestration of a full run and the manifest describing it.
//!
//! Stages run in the order of [`STAGES`]. A failing stage marks every later
//! stage as skipped, and so does reaching the configured `stage_until`.
//! Everything that may legitimately differ between two runs with the same
//! configuration (wall-clock timings, thread count, whether the tensor came
//! from the cache) lives in [`Runtime`], never in the manifest.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bvp::build_ell;
use crate::chapman_enskog::TransportModel;
use crate::closure::{macro_to_hydro, GalerkinClosure};
use crate::collision::{
    discretized_maxwellian, load_or_assemble, spectral_gap, CacheError, CollisionError, CollisionTensor,
    KernelParams,
};
use crate::config::{validation_errors, ConfigError, RunConfig, STAGES};
use crate::fixedpoint::{
    error_term_macro_part, iterate, residual, sobolev_norm, Background, FixedPointProblem, IterationOptions,
    IterationState, KineticShock, ResidualReport,
};
use crate::fluid::{rh_solve, HydroState, RHSolution};
use crate::hermite::{build_index_set, macro_coords, MacroState, ProxyNorm};
use crate::ns_shock::{closure_frame, profile_diagnostics, solve_profile, GridConfig, NSProfile, ShockFrame};

pub const MANIFEST_SCHEMA: &str = "kinshock-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub report: Value,
}

/// Class of a failure, which determines the process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Validation,
    Numerical,
    Io,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Validation => 2,
            FailureKind::Numerical => 3,
            FailureKind::Io => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Failure {
    pub stage: String,
    pub kind: FailureKind,
    pub message: String,
}

/// Column layout of one emitted table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSchema {
    pub file: String,
    pub version: u32,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema: String,
    pub version: u32,
    pub crate_version: String,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    /// Pass/fail of the single-run acceptance thresholds that could be evaluated.
    pub checks: BTreeMap<String, bool>,
    #[serde(default)]
    pub failure: Option<Failure>,
    pub files: Vec<FileSchema>,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, |f| f.kind.exit_code())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub threads: usize,
    pub cache_hit: Option<bool>,
    pub timings: Vec<StageTiming>,
}

/// Manifest plus the in-memory artifacts needed to write the tables.
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub runtime: Runtime,
    pub profile: Option<NSProfile>,
    pub background: Option<Background>,
    pub iteration: Option<IterationState>,
    pub shock: Option<KineticShock>,
    pub residual: Option<ResidualReport>,
}

#[derive(Debug)]
struct StageError {
    kind: FailureKind,
    message: String,
}

fn numerical(e: impl Display) -> StageError {
    StageError {
        kind: FailureKind::Numerical,
        message: e.to_string(),
    }
}

fn collision_failure(e: CollisionError) -> StageError {
    match e {
        CollisionError::Cache(CacheError::Io { .. }) => StageError {
            kind: FailureKind::Io,
            message: e.to_string(),
        },
        other => numerical(other),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

struct Runner<'a> {
    config: &'a RunConfig,
    stages: Vec<StageRecord>,
    timings: Vec<StageTiming>,
    failure: Option<Failure>,
    halt: Option<String>,
}

impl<'a> Runner<'a> {
    fn stage<T>(&mut self, name: &str, body: impl FnOnce() -> Result<(T, Value), StageError>) -> Option<T> {
        if let Some(reason) = &self.halt {
            self.stages.push(StageRecord {
                name: name.into(),
                status: StageStatus::Skipped,
                reason: Some(reason.clone()),
                report: Value::Null,
            });
            return None;
        }
        let start = Instant::now();
        let result = body();
        self.timings.push(StageTiming {
            stage: name.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        match result {
            Ok((value, report)) => {
                self.stages.push(StageRecord {
                    name: name.into(),
                    status: StageStatus::Ok,
                    reason: None,
                    report,
                });
                if self.config.stage_until.as_deref() == Some(name) {
                    self.halt = Some(format!("run stopped after stage '{name}'"));
                }
                Some(value)
            }
            Err(e) => {
                self.stages.push(StageRecord {
                    name: name.into(),
                    status: StageStatus::Failed,
                    reason: Some(e.message.clone()),
                    report: Value::Null,
                });
                self.failure = Some(Failure {
                    stage: name.into(),
                    kind: e.kind,
                    message: e.message,
                });
                self.halt = Some(format!("upstream stage '{name}' failed"));
                None
            }
        }
    }

    fn skip_rest(&mut self) {
        let reason = self.halt.clone().unwrap_or_else(|| "not reached".into());
        for name in STAGES {
            if !self.stages.iter().any(|s| s.name == name) {
                self.stages.push(StageRecord {
                    name: name.into(),
                    status: StageStatus::Skipped,
                    reason: Some(reason.clone()),
                    report: Value::Null,
                });
            }
        }
    }
}

struct TensorStage {
    tensor: CollisionTensor,
    hit: bool,
}

struct TransportStage {
    model: TransportModel,
    closure: GalerkinClosure,
}

struct Artifacts {
    cache_hit: Option<bool>,
    profile: Option<NSProfile>,
    background: Option<Background>,
    iteration: Option<IterationState>,
    shock: Option<KineticShock>,
    residual: Option<ResidualReport>,
    checks: BTreeMap<String, bool>,
}

/// Runs the pipeline with the rayon pool sized to `threads` (all cores when
/// `None`). The configuration is validated first.
pub fn run_pipeline(config: &RunConfig, threads: Option<usize>) -> Result<RunOutcome, ConfigError> {
    let errors = validation_errors(config);
    if !errors.is_empty() {
        return Err(ConfigError::Validation(errors));
    }
    if threads == Some(0) {
        return Err(ConfigError::Validation(vec!["threads must be at least 1".into()]));
    }
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        let pool = builder
            .build()
            .map_err(|e| ConfigError::Validation(vec![format!("cannot create thread pool: {e}")]))?;
        let used = pool.current_num_threads();
        Ok(pool.install(|| execute(config, used)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(execute(config, 1))
    }
}

fn execute(config: &RunConfig, threads: usize) -> RunOutcome {
    let mut runner = Runner {
        config,
        stages: Vec::new(),
        timings: Vec::new(),
        failure: None,
        halt: None,
    };
    let mut art = Artifacts {
        cache_hit: None,
        profile: None,
        background: None,
        iteration: None,
        shock: None,
        residual: None,
        checks: BTreeMap::new(),
    };
    run_stages(config, &mut runner, &mut art);
    runner.skip_rest();
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        version: MANIFEST_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        stages: runner.stages,
        checks: art.checks,
        failure: runner.failure,
        files: crate::output::file_schemas(),
    };
    RunOutcome {
        manifest,
        runtime: Runtime {
            threads,
            cache_hit: art.cache_hit,
            timings: runner.timings,
        },
        profile: art.profile,
        background: art.background,
        iteration: art.iteration,
        shock: art.shock,
        residual: art.residual,
    }
}

fn run_stages(cfg: &RunConfig, r: &mut Runner, art: &mut Artifacts) {
    let kappa = cfg.kappa;
    let Some(ts) = r.stage("tensor", || tensor_stage(cfg)) else {
        return;
    };
    art.cache_hit = Some(ts.hit);
    let tensor = ts.tensor;

    let Some(rh) = r.stage("rh", || {
        let rh = rh_solve(HydroState::REFERENCE, cfg.epsilon).map_err(numerical)?;
        let lax_gap = rh.v_minus.lambda3() - rh.speed;
        Ok((rh, json!({ "solution": to_value(&rh), "lambda3_minus_speed": lax_gap })))
    }) else {
        return;
    };
    art.checks.insert("rh_residual".into(), rh.residual <= 1e-12);

    let Some(tr) = r.stage("transport", || {
        let model = TransportModel::new(&tensor, kappa).map_err(numerical)?;
        let closure = GalerkinClosure::new(&tensor, kappa);
        let at = |t: f64| -> Result<Value, StageError> {
            let (mu, heat) = model.at(t).map_err(numerical)?;
            Ok(json!({ "temperature": t, "mu": mu, "heat_conductivity": heat }))
        };
        let report = json!({
            "coefficients": to_value(&model.coeffs),
            "left": at(rh.v_minus.t)?,
            "right": at(rh.v_plus.t)?,
        });
        Ok((TransportStage { model, closure }, report))
    }) else {
        return;
    };
    art.checks.insert(
        "transport_positive".into(),
        tr.model.coeffs.mu_tilde > 0.0 && tr.model.coeffs.kappa_tilde > 0.0,
    );

    let Some(profile) = r.stage("profile", || profile_stage(cfg, &rh, &tr)) else {
        return;
    };
    art.checks.insert("profile_ode_residual".into(), profile.ode_residual <= 1e-9);
    art.checks.insert(
        "profile_endpoints".into(),
        profile.left_error.max(profile.right_error) <= 1e-6,
    );
    art.profile = Some(profile.clone());

    let Some(background) = r.stage("lift", || {
        let bg = Background::new(&profile, &tr.closure).map_err(numerical)?;
        let set = &tr.closure.set;
        let mut moment_error = 0.0f64;
        for (i, m) in bg.maxwellian.iter().enumerate() {
            let a = macro_coords(m, set).to_vector();
            moment_error = moment_error.max((a - profile.macro_vec(i)).amax());
        }
        let f_perp_sup = bg.f_perp.iter().map(|v| v.amax()).fold(0.0, f64::max);
        let report = json!({
            "nodes": bg.grid.len(),
            "maxwellian_moment_error": moment_error,
            "f_perp_sup": f_perp_sup,
        });
        Ok((bg, report))
    }) else {
        return;
    };
    art.background = Some(background.clone());

    let Some(problem) = r.stage("ell", || {
        let ell = build_ell(&profile, &tr.model).map_err(numerical)?;
        let problem = FixedPointProblem::from_background(
            background,
            &profile.frame,
            &tr.closure,
            kappa,
            &ell,
            cfg.eta,
            cfg.gamma,
            cfg.s,
        )
        .map_err(numerical)?;
        let zeros = vec![DVector::zeros(problem.set.dim()); problem.background.grid.len()];
        let macro_part = error_term_macro_part(
            &zeros,
            &problem.background,
            &problem.form,
            &problem.a_minus_s,
            &problem.set,
        );
        let e0 = problem.error_term(&zeros).map_err(numerical)?;
        let id = nalgebra::DMatrix::identity(problem.set.dim(), problem.set.dim());
        let report = json!({
            "ell": ell.as_slice(),
            "system_dim": problem.system.dim(),
            "endpoint": to_value(&problem.analysis),
            "dimension_sum": problem.analysis.dimension_sum(),
            "error_term_zero_norm": sobolev_norm(&problem.background.grid, &e0, &id, problem.epsilon),
            "error_term_zero_macro_part": macro_part,
        });
        Ok((problem, report))
    }) else {
        return;
    };
    art.checks.insert(
        "dimension_sum".into(),
        problem.analysis.dimension_sum() == problem.system.dim() + 1,
    );
    art.checks.insert("endpoint_hyperbolic".into(), problem.analysis.margin > 0.0);

    let Some((state, shock)) = r.stage("fixedpoint", || {
        let opts = IterationOptions {
            max_iterations: cfg.tolerances.max_iterations,
            tolerance: cfg.tolerances.fixed_point,
            ..IterationOptions::default()
        };
        let (state, shock) = iterate(&problem, &opts).map_err(numerical)?;
        let macro_part = error_term_macro_part(
            &state.f,
            &problem.background,
            &problem.form,
            &problem.a_minus_s,
            &problem.set,
        );
        let report = json!({
            "iteration": to_value(&state),
            "solution_norm": problem.norm(&state.f),
            "solution_sup": state.f.iter().map(|v| v.amax()).fold(0.0, f64::max),
            "error_term_macro_part": macro_part,
            "provenance": to_value(&shock.provenance),
        });
        art.checks.insert("error_term_microscopic".into(), macro_part <= 1e-9);
        Ok(((state, shock), report))
    }) else {
        return;
    };
    art.checks.insert("contraction_factor".into(), state.contraction_factor <= 0.5);

    let rep = r.stage("residual", || {
        let rep = residual(&shock, &problem).map_err(numerical)?;
        let bg = &problem.background;
        let deviation = (0..shock.grid.len())
            .map(|i| (&shock.coeffs[i] - &bg.maxwellian[i]).amax())
            .fold(0.0, f64::max);
        let mut report = to_value(&rep);
        if let Value::Object(map) = &mut report {
            map.insert("deviation_from_lift_sup".into(), json!(deviation));
        }
        Ok((rep, report))
    });
    art.iteration = Some(state);
    art.shock = Some(shock);
    if let Some(rep) = rep {
        art.checks.insert("interior_residual".into(), rep.interior_residual <= 1e-6);
        art.checks.insert(
            "flux_constant".into(),
            rep.flux_variation.iter().all(|v| *v <= 1e-8),
        );
        art.residual = Some(rep);
    }
}

fn tensor_stage(cfg: &RunConfig) -> Result<(TensorStage, Value), StageError> {
    let set = build_index_set(cfg.order).map_err(numerical)?;
    let params = KernelParams::new(cfg.gamma, cfg.s, cfg.kappa).map_err(numerical)?;
    let quad = cfg.quadrature_config();
    let (tensor, hit) = load_or_assemble(cfg.cache.as_deref(), &set, &params, &quad).map_err(collision_failure)?;
    let reference = discretized_maxwellian(&tensor, cfg.kappa, MacroState::REFERENCE).map_err(numerical)?;
    let form = tensor.form(cfg.kappa);
    let m = &reference.coeffs.coeffs;
    let equilibrium = form.apply(m, m).norm();
    let l = form.linearize(m);
    let gram = ProxyNorm::new(&set, cfg.gamma, cfg.s).gram;
    let gap = spectral_gap(&l, &set, Some(&gram)).map_err(numerical)?;
    let report = json!({
        "degree": tensor.degree,
        "dim": tensor.dim(),
        "quadrature": to_value(&tensor.quad),
        "equilibrium_residual": equilibrium,
        "spectral_gap": to_value(&gap),
    });
    Ok((TensorStage { tensor, hit }, report))
}

fn profile_stage(cfg: &RunConfig, rh: &RHSolution, tr: &TransportStage) -> Result<(NSProfile, Value), StageError> {
    let frame = ShockFrame::from_rh(rh);
    let (gframe, closure_residual) = closure_frame(&frame, &tr.closure).map_err(numerical)?;
    let grid = GridConfig {
        half_length: cfg.domain,
        nodes: cfg.grid,
    };
    let profile = solve_profile(&gframe, &tr.closure, &grid).map_err(numerical)?;
    let diag = profile_diagnostics(&profile, &tr.closure).map_err(numerical)?;
    let report = json!({
        "frame": to_value(&profile.frame),
        "closure_jump_residual": closure_residual,
        "nodes": profile.grid.len(),
        "ode_residual": profile.ode_residual,
        "left_error": profile.left_error,
        "right_error": profile.right_error,
        "unstable_rate": profile.unstable_rate,
        "diagnostics": to_value(&diag),
    });
    Ok((profile, report))
}

/// Hydrodynamic moments `(rho, u, T)` of a coefficient vector.
pub fn moments(coeffs: &DVector<f64>, set: &crate::hermite::HermiteIndexSet) -> Option<HydroState> {
    macro_to_hydro(&macro_coords(coeffs, set).to_vector()).ok()
}
