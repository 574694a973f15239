//! Outer contraction `f -> L^+ E[f]` around the lifted Navier-Stokes profile
//! and assembly of the full kinetic shock `F = M + f_perp + f`.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::bvp::{
    assemble_system, endpoint_analysis, solve_with_analysis, BvpError, EndpointAnalysis, FirstOrderSystem,
};
use crate::closure::GalerkinClosure;
use crate::collision::{ordered_map, BilinearForm, MaxwellianSolver};
use crate::hermite::{HermiteIndexSet, MacroState, ProxyNorm};
use crate::ns_shock::{sample_galerkin, LiftMode, NSProfile, NsError, ProfileField, ShockFrame};
use crate::stencil::{derivative_vectors, trapezoid, uniform_spacing};

#[derive(Debug, Error)]
pub enum FixedPointError {
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("error term has macroscopic part {macro_norm:e} at node {node}")]
    NonMicroscopicError { node: usize, macro_norm: f64 },
    #[error("iteration stalled: step ratio {ratio} at iteration {iteration} (Lipschitz estimate)")]
    ContractionStall { iteration: usize, ratio: f64 },
    #[error("no convergence in {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error(transparent)]
    Bvp(#[from] BvpError),
    #[error(transparent)]
    Profile(#[from] NsError),
}

/// Largest macroscopic part tolerated in the error term.
pub const MICRO_TOL: f64 = 1e-9;

/// Per-node data of the lifted profile: discretized Maxwellian, its derivative
/// in macro coordinates and the Chapman-Enskog correction with its `x`-derivative.
#[derive(Clone, Debug)]
pub struct Background {
    pub grid: Vec<f64>,
    pub maxwellian: Vec<DVector<f64>>,
    pub dm: Vec<DMatrix<f64>>,
    pub f_perp: Vec<DVector<f64>>,
    pub f_perp_dx: Vec<DVector<f64>>,
}

impl Background {
    pub fn new(profile: &NSProfile, closure: &GalerkinClosure) -> Result<Self, FixedPointError> {
        let h = uniform_spacing(&profile.grid)
            .ok_or_else(|| FixedPointError::GridMismatch("profile grid must be uniform".into()))?;
        let states = sample_galerkin(profile, closure)?;
        let f_perp: Vec<DVector<f64>> = states
            .iter()
            .enumerate()
            .map(|(i, st)| st.correction.apply(&profile.macro_deriv_vec(i)))
            .collect();
        let f_perp_dx = derivative_vectors(&f_perp, h);
        Ok(Background {
            grid: profile.grid.clone(),
            maxwellian: states.iter().map(|s| s.maxwellian.clone()).collect(),
            dm: states.into_iter().map(|s| s.dm).collect(),
            f_perp,
            f_perp_dx,
        })
    }

    pub fn field(&self) -> ProfileField {
        ProfileField {
            grid: self.grid.clone(),
            coeffs: self.maxwellian.clone(),
            mode: LiftMode::Discretized,
        }
    }
}

/// `E[f] = -(I - P_u)(xi_1 - s) d/dx f_perp + Q(f_perp, f_perp) + 2 Q(f_perp, f) + Q(f, f)`
/// per node, with `Q` the symmetric bilinear form. Fails if any node has a
/// macroscopic part above [`MICRO_TOL`].
pub fn error_term(
    f: &[DVector<f64>],
    bg: &Background,
    form: &BilinearForm,
    a_minus_s: &DMatrix<f64>,
    set: &HermiteIndexSet,
) -> Result<Vec<DVector<f64>>, FixedPointError> {
    let m = bg.grid.len();
    if f.len() != m {
        return Err(FixedPointError::GridMismatch(format!("{} nodes for a {m}-node profile", f.len())));
    }
    let e = set.macro_basis();
    let idx: Vec<usize> = (0..m).collect();
    let z = ordered_map(&idx, |&i| {
        let t = a_minus_s * &bg.f_perp_dx[i];
        let linear = &t - &bg.dm[i] * (e.transpose() * &t);
        let fp = &bg.f_perp[i];
        let mut zi = -linear + form.apply(fp, fp) + form.apply(fp, &f[i]) * 2.0 + form.apply(&f[i], &f[i]);
        let mac = e.transpose() * &zi;
        let scale = zi.amax().max(1.0);
        let macro_norm = mac.amax();
        zi -= &e * mac;
        (zi, macro_norm / scale)
    });
    let mut out = Vec::with_capacity(m);
    for (node, (zi, macro_norm)) in z.into_iter().enumerate() {
        if macro_norm > MICRO_TOL {
            return Err(FixedPointError::NonMicroscopicError { node, macro_norm });
        }
        out.push(zi);
    }
    Ok(out)
}

/// Largest relative macroscopic part of the raw error term, before cleanup.
pub fn error_term_macro_part(
    f: &[DVector<f64>],
    bg: &Background,
    form: &BilinearForm,
    a_minus_s: &DMatrix<f64>,
    set: &HermiteIndexSet,
) -> f64 {
    let e = set.macro_basis();
    (0..bg.grid.len())
        .map(|i| {
            let t = a_minus_s * &bg.f_perp_dx[i];
            let linear = &t - &bg.dm[i] * (e.transpose() * &t);
            let fp = &bg.f_perp[i];
            let zi = -linear + form.apply(fp, fp) + form.apply(fp, &f[i]) * 2.0 + form.apply(&f[i], &f[i]);
            (e.transpose() * &zi).amax() / zi.amax().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Discrete `H^2_eps HH^1` proxy: `sum_j eps^{1-2j} int |d^j f / dx^j|^2_HH1`.
pub fn sobolev_norm(grid: &[f64], f: &[DVector<f64>], gram: &DMatrix<f64>, epsilon: f64) -> f64 {
    let h = uniform_spacing(grid).expect("uniform grid");
    let d1 = derivative_vectors(f, h);
    let d2 = derivative_vectors(&d1, h);
    let q = |v: &DVector<f64>| (v.transpose() * gram * v)[(0, 0)].max(0.0);
    let mut total = 0.0;
    for (j, layer) in [f, &d1[..], &d2[..]].iter().enumerate() {
        let dens: Vec<f64> = layer.iter().map(q).collect();
        total += epsilon.powi(1 - 2 * j as i32) * trapezoid(grid, &dens);
    }
    total.sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub stall_ratio: f64,
    /// Phase value `d` in `ell . P f(0) = d`.
    pub phase: f64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            max_iterations: 25,
            tolerance: 1e-10,
            stall_ratio: 0.9,
            phase: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `|f_{k+1} - f_k|` in the Sobolev proxy.
    pub step_norm: f64,
    pub ratio: Option<f64>,
    pub solution_norm: f64,
    pub phase_value: f64,
    pub linear_residual: f64,
    pub source_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationState {
    #[serde(skip)]
    pub f: Vec<DVector<f64>>,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    /// Largest step ratio once both steps are above the roundoff floor.
    pub contraction_factor: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub epsilon: f64,
    pub degree: usize,
    pub kappa: f64,
    pub eta: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KineticShock {
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub coeffs: Vec<DVector<f64>>,
    pub frame: ShockFrame,
    pub provenance: Provenance,
}

/// Everything the outer iteration reuses between steps.
pub struct FixedPointProblem {
    pub set: HermiteIndexSet,
    pub form: BilinearForm,
    pub kappa: f64,
    pub a_minus_s: DMatrix<f64>,
    pub background: Background,
    pub system: FirstOrderSystem,
    pub analysis: EndpointAnalysis,
    pub ell: DVector<f64>,
    pub gram: DMatrix<f64>,
    pub frame: ShockFrame,
    pub epsilon: f64,
}

impl FixedPointProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        profile: &NSProfile,
        closure: &GalerkinClosure,
        kappa: f64,
        ell: &Vector3<f64>,
        eta: f64,
        gamma: f64,
        s: f64,
    ) -> Result<Self, FixedPointError> {
        let background = Background::new(profile, closure)?;
        Self::from_background(background, &profile.frame, closure, kappa, ell, eta, gamma, s)
    }

    /// Same as [`FixedPointProblem::new`] with an already lifted profile.
    #[allow(clippy::too_many_arguments)]
    pub fn from_background(
        background: Background,
        frame: &ShockFrame,
        closure: &GalerkinClosure,
        kappa: f64,
        ell: &Vector3<f64>,
        eta: f64,
        gamma: f64,
        s: f64,
    ) -> Result<Self, FixedPointError> {
        let set = closure.set.clone();
        let form = closure.form.clone();
        let n = set.dim();
        let a_minus_s = &closure.a - DMatrix::identity(n, n) * frame.speed;
        let zeros = vec![DVector::zeros(n); background.grid.len()];
        let system = assemble_system(&background.field(), &form, &set, frame, eta, &zeros)?;
        let analysis = endpoint_analysis(&system)?;
        Ok(FixedPointProblem {
            gram: ProxyNorm::new(&set, gamma, s).gram,
            set,
            form,
            kappa,
            a_minus_s,
            background,
            system,
            analysis,
            ell: DVector::from_column_slice(ell.as_slice()),
            frame: *frame,
            epsilon: frame.epsilon,
        })
    }

    pub fn error_term(&self, f: &[DVector<f64>]) -> Result<Vec<DVector<f64>>, FixedPointError> {
        error_term(f, &self.background, &self.form, &self.a_minus_s, &self.set)
    }

    /// One application of `f -> L^+ E[f]`, returning the new iterate with the
    /// phase value and backward error of the linear solve.
    pub fn step(&self, f: &[DVector<f64>], phase: f64) -> Result<(Vec<DVector<f64>>, f64, f64, f64), FixedPointError> {
        let z = self.error_term(f)?;
        let source_norm = sobolev_norm(&self.background.grid, &z, &DMatrix::identity(self.set.dim(), self.set.dim()), self.epsilon);
        let g = self.system.kinetic_source(&z)?;
        let sys = self.system.with_source(g)?;
        let sol = solve_with_analysis(&sys, &self.analysis, &self.ell, phase)?;
        let kin = self.system.kinetic.as_ref().expect("assembled from a profile");
        let f_new: Vec<DVector<f64>> = sol
            .states
            .iter()
            .zip(&kin.blocks)
            .map(|(st, b)| kin.basis.extract(st, b, self.system.eta).0)
            .collect();
        Ok((f_new, sol.phase_value, sol.linear_residual, source_norm))
    }

    pub fn norm(&self, f: &[DVector<f64>]) -> f64 {
        sobolev_norm(&self.background.grid, f, &self.gram, self.epsilon)
    }

    pub fn assemble_shock(&self, f: &[DVector<f64>], eta: f64, tolerance: f64) -> KineticShock {
        let bg = &self.background;
        KineticShock {
            grid: bg.grid.clone(),
            coeffs: (0..bg.grid.len()).map(|i| &bg.maxwellian[i] + &bg.f_perp[i] + &f[i]).collect(),
            frame: self.frame,
            provenance: Provenance {
                epsilon: self.epsilon,
                degree: self.set.degree,
                kappa: self.kappa,
                eta,
                tolerance,
            },
        }
    }
}

/// Runs the contraction from `f = 0`.
pub fn iterate(
    problem: &FixedPointProblem,
    opts: &IterationOptions,
) -> Result<(IterationState, KineticShock), FixedPointError> {
    let m = problem.background.grid.len();
    let n = problem.set.dim();
    let mut f = vec![DVector::zeros(n); m];
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut contraction: f64 = 0.0;
    let mut converged = false;
    for k in 0..opts.max_iterations {
        let (next, phase_value, linear_residual, source_norm) = problem.step(&f, opts.phase)?;
        let diff: Vec<DVector<f64>> = next.iter().zip(&f).map(|(a, b)| a - b).collect();
        let step_norm = problem.norm(&diff);
        let solution_norm = problem.norm(&next);
        let floor = 1e-12 * solution_norm.max(1e-300);
        let ratio = history.last().and_then(|prev| {
            (prev.step_norm > floor && step_norm > floor).then(|| step_norm / prev.step_norm)
        });
        f = next;
        history.push(IterationRecord {
            iteration: k + 1,
            step_norm,
            ratio,
            solution_norm,
            phase_value,
            linear_residual,
            source_norm,
        });
        if let Some(r) = ratio {
            contraction = contraction.max(r);
            if r >= opts.stall_ratio {
                return Err(FixedPointError::ContractionStall { iteration: k + 1, ratio: r });
            }
        }
        if step_norm <= opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FixedPointError::NoConvergence {
            iterations: history.len(),
            last_step: history.last().map_or(f64::NAN, |r| r.step_norm),
        });
    }
    let shock = problem.assemble_shock(&f, problem.system.eta, opts.tolerance);
    Ok((
        IterationState {
            f,
            iterations: history.len(),
            history,
            contraction_factor: contraction,
            converged,
        },
        shock,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// `max |(xi_1 - s) F' - Q(F, F)|` over all nodes, Euclidean in coefficients.
    pub max_residual: f64,
    /// Same, excluding three nodes at each end where the stencils are one-sided.
    pub interior_residual: f64,
    /// `max_i |P[(xi_1 - s) F](x_i) - P[(xi_1 - s) F](x_0)|` per component.
    pub flux_variation: [f64; 3],
    /// Distances of the end nodes from the discretized endpoint Maxwellians.
    pub left_boundary: f64,
    pub right_boundary: f64,
    /// `sup |f_perp|` and its Sobolev proxy norm.
    pub f_perp_sup: f64,
    pub f_perp_norm: f64,
    #[serde(skip)]
    pub per_node: Vec<f64>,
}

/// Travelling-wave residual and conservation diagnostics of an assembled shock.
pub fn residual(
    shock: &KineticShock,
    problem: &FixedPointProblem,
) -> Result<ResidualReport, FixedPointError> {
    let h = uniform_spacing(&shock.grid)
        .ok_or_else(|| FixedPointError::GridMismatch("shock grid must be uniform".into()))?;
    let m = shock.grid.len();
    let dfdx = derivative_vectors(&shock.coeffs, h);
    let idx: Vec<usize> = (0..m).collect();
    let res: Vec<f64> = ordered_map(&idx, |&i| {
        (&problem.a_minus_s * &dfdx[i] - problem.form.apply(&shock.coeffs[i], &shock.coeffs[i])).norm()
    });
    let e = problem.set.macro_basis();
    let flux: Vec<DVector<f64>> = shock.coeffs.iter().map(|c| e.transpose() * (&problem.a_minus_s * c)).collect();
    let mut var = [0.0f64; 3];
    for fl in &flux {
        for k in 0..3 {
            var[k] = var[k].max((fl[k] - flux[0][k]).abs());
        }
    }
    let solver = MaxwellianSolver::new(&problem.form, &problem.set);
    let ml = solver
        .solve(MacroState::from_hydro(shock.frame.v_minus))
        .map_err(BvpError::from)?
        .coeffs
        .coeffs;
    let mr = solver
        .solve(MacroState::from_hydro(shock.frame.v_plus))
        .map_err(BvpError::from)?
        .coeffs
        .coeffs;
    let inner = if m > 6 { &res[3..m - 3] } else { &res[..] };
    let bg = &problem.background;
    Ok(ResidualReport {
        max_residual: res.iter().cloned().fold(0.0, f64::max),
        interior_residual: inner.iter().cloned().fold(0.0, f64::max),
        flux_variation: var,
        left_boundary: (&shock.coeffs[0] - ml).norm(),
        right_boundary: (&shock.coeffs[m - 1] - mr).norm(),
        f_perp_sup: bg.f_perp.iter().map(|v| v.amax()).fold(0.0, f64::max),
        f_perp_norm: problem.norm(&bg.f_perp),
        per_node: res,
    })
}
