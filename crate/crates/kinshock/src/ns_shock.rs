//! Viscous travelling-wave profile of the compressible Navier-Stokes system
//! and its Maxwellian lift.
//!
//! The profile is computed in macro coordinates from the integrated relation
//! `J(a) - s a - B(a) a' = J(a_-) - s a_-`. Its mass row is algebraic, which
//! leaves a planar system in `(a0, a2)` with a saddle at the left state.

use nalgebra::{DVector, Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::{hydro_jacobian, hydro_to_macro, macro_to_hydro, ClosureError, GalerkinClosure, HydroClosure};
use crate::collision::{ordered_map, BilinearForm, CollisionError, MaxwellianSolver};
use crate::fluid::{HydroState, RHSolution};
use crate::hermite::{maxwellian_coefficients, HermiteIndexSet, MacroState};
use crate::ode::{integrate, Tolerances};

#[derive(Debug, Error)]
pub enum NsError {
    #[error("mass flux rho (u - s) vanishes at {0:?}")]
    DegenerateMassFlux(HydroState),
    #[error("shooting orbit escaped: {0}")]
    OrbitEscape(String),
    #[error("grid half-length {half_length} (stretched) is shorter than the required {required}")]
    GridTooShort { half_length: f64, required: f64 },
    #[error("invalid profile configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error("discretized Maxwellian failed at node {node}: {source}")]
    LiftFailure {
        node: usize,
        #[source]
        source: CollisionError,
    },
}

/// Endpoints and speed of the shock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockFrame {
    pub epsilon: f64,
    pub speed: f64,
    pub v_minus: HydroState,
    pub v_plus: HydroState,
}

impl ShockFrame {
    pub fn from_rh(rh: &RHSolution) -> Self {
        ShockFrame {
            epsilon: rh.epsilon,
            speed: rh.speed,
            v_minus: rh.v_minus,
            v_plus: rh.v_plus,
        }
    }
}

/// Re-solves the jump condition `J(a_+) - s a_+ = J(a_-) - s a_-` for the
/// closure's own flux at fixed speed, starting from the given right state.
pub fn closure_frame<C: HydroClosure + ?Sized>(
    frame: &ShockFrame,
    closure: &C,
) -> Result<(ShockFrame, f64), NsError> {
    let s = frame.speed;
    let am = hydro_to_macro(frame.v_minus);
    let target = closure.flux(&am)? - am * s;
    let mut ap = hydro_to_macro(frame.v_plus);
    let mut res = closure.flux(&ap)? - ap * s - target;
    for _ in 0..30 {
        if res.norm() < 1e-15 {
            break;
        }
        let j = closure.flux_jacobian(&ap)? - nalgebra::Matrix3::identity() * s;
        let step = j
            .lu()
            .solve(&res)
            .ok_or_else(|| NsError::OrbitEscape("singular jump-condition Jacobian".into()))?;
        let trial = ap - step;
        let tres = closure.flux(&trial)? - trial * s - target;
        if tres.norm() >= res.norm() {
            break;
        }
        ap = trial;
        res = tres;
    }
    let vp = macro_to_hydro(&ap).map_err(ClosureError::from)?;
    Ok((
        ShockFrame {
            v_plus: vp,
            ..*frame
        },
        res.norm(),
    ))
}

/// Uniform grid on `[-L/eps, L/eps]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub half_length: f64,
    pub nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_length: 10.0,
            nodes: 801,
        }
    }
}

impl GridConfig {
    pub fn points(&self, epsilon: f64) -> Vec<f64> {
        let l = self.half_length / epsilon;
        let n = self.nodes;
        (0..n)
            .map(|i| -l + 2.0 * l * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// The planar travelling-wave vector field in `y = (a0, a2)`.
pub struct ReducedSystem<'a, C: HydroClosure + ?Sized> {
    pub closure: &'a C,
    pub speed: f64,
    pub constant: Vector3<f64>,
}

impl<'a, C: HydroClosure + ?Sized> ReducedSystem<'a, C> {
    pub fn new(closure: &'a C, frame: &ShockFrame) -> Result<Self, NsError> {
        let am = hydro_to_macro(frame.v_minus);
        let constant = closure.flux(&am)? - am * frame.speed;
        Ok(ReducedSystem {
            closure,
            speed: frame.speed,
            constant,
        })
    }

    pub fn macro_of(&self, y: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new(y[0], self.constant[0] + self.speed * y[0], y[1])
    }

    pub fn reduce(a: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(a[0], a[2])
    }

    /// `a'` from `y'`.
    pub fn lift_derivative(&self, dy: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new(dy[0], self.speed * dy[0], dy[1])
    }

    pub fn rhs(&self, y: &Vector2<f64>) -> Result<Vector2<f64>, NsError> {
        let a = self.macro_of(y);
        let v = macro_to_hydro(&a).map_err(ClosureError::from)?;
        if (v.rho * (v.u - self.speed)).abs() < 1e-12 {
            return Err(NsError::DegenerateMassFlux(v));
        }
        let (j, b) = self.closure.evaluate(&a)?;
        let r = j - a * self.speed - self.constant;
        let s = self.speed;
        let m = Matrix2::new(
            b[(1, 0)] + s * b[(1, 1)],
            b[(1, 2)],
            b[(2, 0)] + s * b[(2, 1)],
            b[(2, 2)],
        );
        m.lu()
            .solve(&Vector2::new(r[1], r[2]))
            .ok_or(NsError::DegenerateMassFlux(v))
    }

    /// Central-difference Jacobian of [`ReducedSystem::rhs`].
    pub fn jacobian(&self, y: &Vector2<f64>) -> Result<Matrix2<f64>, NsError> {
        let mut k = Matrix2::zeros();
        for c in 0..2 {
            let h = 1e-6 * y[c].abs().max(1.0);
            let mut p = *y;
            let mut m = *y;
            p[c] += h;
            m[c] -= h;
            let d = (self.rhs(&p)? - self.rhs(&m)?) / (2.0 * h);
            k.set_column(c, &d);
        }
        Ok(k)
    }
}

/// `(du/dx, dT/dx)` of the viscous profile at state `v`.
pub fn reduced_ode<C: HydroClosure + ?Sized>(
    v: HydroState,
    frame: &ShockFrame,
    closure: &C,
) -> Result<(f64, f64), NsError> {
    let sys = ReducedSystem::new(closure, frame)?;
    let a = hydro_to_macro(v);
    let dy = sys.rhs(&ReducedSystem::<C>::reduce(&a))?;
    let da = sys.lift_derivative(&dy);
    let dv = hydro_jacobian(&a) * da;
    Ok((dv[1], dv[2]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NSProfile {
    pub frame: ShockFrame,
    pub grid: Vec<f64>,
    pub states: Vec<HydroState>,
    /// `d/dx (rho, u, T)`.
    pub derivative: Vec<[f64; 3]>,
    pub macro_states: Vec<[f64; 3]>,
    pub macro_derivative: Vec<[f64; 3]>,
    /// Largest Hermite-Simpson defect over grid intervals.
    pub ode_residual: f64,
    pub left_error: f64,
    pub right_error: f64,
    /// Unstable eigenvalue of the linearization at the left state.
    pub unstable_rate: f64,
}

impl NSProfile {
    pub fn center_index(&self) -> usize {
        let mut best = 0;
        for (i, x) in self.grid.iter().enumerate() {
            if x.abs() < self.grid[best].abs() {
                best = i;
            }
        }
        best
    }

    pub fn macro_vec(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.macro_states[i])
    }

    pub fn macro_deriv_vec(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.macro_derivative[i])
    }
}

fn to_v2(y: &[f64]) -> Vector2<f64> {
    Vector2::new(y[0], y[1])
}

/// Shooting solve of the heteroclinic orbit from the left to the right state.
pub fn solve_profile<C: HydroClosure + ?Sized>(
    frame: &ShockFrame,
    closure: &C,
    grid: &GridConfig,
) -> Result<NSProfile, NsError> {
    let eps = frame.epsilon;
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(NsError::InvalidConfig(format!("epsilon {eps} outside (0, 0.1]")));
    }
    if grid.half_length < 8.0 {
        return Err(NsError::GridTooShort {
            half_length: grid.half_length,
            required: 8.0,
        });
    }
    if grid.nodes < 3 || grid.nodes % 2 == 0 {
        return Err(NsError::InvalidConfig(format!(
            "grid needs an odd node count >= 3, got {}",
            grid.nodes
        )));
    }
    let sys = ReducedSystem::new(closure, frame)?;
    let ym = ReducedSystem::<C>::reduce(&hydro_to_macro(frame.v_minus));
    let yp = ReducedSystem::<C>::reduce(&hydro_to_macro(frame.v_plus));
    let um = frame.v_minus.u;
    let up = frame.v_plus.u;
    let u_mid = 0.5 * (um + up);

    let k = sys.jacobian(&ym)?;
    let eig = k.complex_eigenvalues();
    let lam = eig
        .iter()
        .filter(|e| e.im.abs() < 1e-14)
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lam > 0.0) {
        return Err(NsError::OrbitEscape(format!(
            "left state is not a saddle: eigenvalues {:?}",
            eig.as_slice()
        )));
    }
    let mut dir = {
        let m = k - Matrix2::identity() * lam;
        let v = if m.column(0).norm() > m.column(1).norm() {
            Vector2::new(-m[(0, 1)], m[(0, 0)])
        } else {
            Vector2::new(-m[(1, 1)], m[(1, 0)])
        };
        let v = if v.norm() == 0.0 { Vector2::new(1.0, 0.0) } else { v };
        v.normalize()
    };
    if dir.dot(&(yp - ym)) < 0.0 {
        dir = -dir;
    }
    let delta = 1e-8 * eps;
    let y_start = ym + dir * delta;
    let tol = Tolerances::default();
    let field = |_: f64, y: &[f64]| -> Option<Vec<f64>> {
        sys.rhs(&to_v2(y)).ok().map(|d| vec![d[0], d[1]])
    };
    let u_of = |y: &[f64]| -> f64 {
        let a = sys.macro_of(&to_v2(y));
        a[1] / a[0]
    };

    let x_end1 = 200.0 / (eps * lam.max(1e-300)).max(1e-300) + 200.0 / eps;
    let x_cap = (60.0 / lam).max(grid.half_length / eps) * 4.0;
    let horizon = x_end1.min(x_cap);
    let (_, steps) = integrate(
        field,
        0.0,
        y_start.as_slice(),
        &[horizon],
        tol,
        0.1 / lam,
        |_, y| u_of(y) < u_mid || (to_v2(y) - yp).norm() < 1e-10,
    )
    .map_err(NsError::OrbitEscape)?;
    let last = steps.last().expect("at least the initial record");
    if u_of(&last.y) > u_mid {
        return Err(NsError::OrbitEscape(format!(
            "orbit did not cross the midpoint velocity by x = {}",
            last.x
        )));
    }
    let prev = &steps[steps.len() - 2];
    let (mut xa, mut xb) = (prev.x, last.x);
    let ya = prev.y.clone();
    let mut x_mid = xb;
    for _ in 0..80 {
        let xm = 0.5 * (xa + xb);
        let (ys, _) = integrate(field, prev.x, &ya, &[xm], tol, (xm - prev.x).max(1e-12), |_, _| false)
            .map_err(NsError::OrbitEscape)?;
        if u_of(&ys[0]) > u_mid {
            xa = xm;
        } else {
            xb = xm;
        }
        x_mid = 0.5 * (xa + xb);
        if xb - xa < 1e-13 * (1.0 + x_mid.abs()) {
            break;
        }
    }

    let pts = grid.points(eps);
    let x0 = -x_mid;
    let mut ys: Vec<Vector2<f64>> = Vec::with_capacity(pts.len());
    let first_after = pts.iter().position(|&x| x > x0).unwrap_or(pts.len());
    for &x in &pts[..first_after] {
        ys.push(ym + dir * (delta * (lam * (x - x0)).exp()));
    }
    if first_after < pts.len() {
        let (sol, _) = integrate(
            field,
            x0,
            y_start.as_slice(),
            &pts[first_after..],
            tol,
            0.1 / lam,
            |_, _| false,
        )
        .map_err(NsError::OrbitEscape)?;
        ys.extend(sol.iter().map(|y| to_v2(y)));
    }

    let mut states = Vec::with_capacity(pts.len());
    let mut derivative = Vec::with_capacity(pts.len());
    let mut macro_states = Vec::with_capacity(pts.len());
    let mut macro_derivative = Vec::with_capacity(pts.len());
    let mut dys = Vec::with_capacity(pts.len());
    for y in &ys {
        let a = sys.macro_of(y);
        let v = macro_to_hydro(&a).map_err(|e| NsError::OrbitEscape(e.to_string()))?;
        let dy = sys.rhs(y)?;
        let da = sys.lift_derivative(&dy);
        let dv = hydro_jacobian(&a) * da;
        states.push(v);
        derivative.push([dv[0], dv[1], dv[2]]);
        macro_states.push([a[0], a[1], a[2]]);
        macro_derivative.push([da[0], da[1], da[2]]);
        dys.push(dy);
    }
    let mut ode_residual = 0.0f64;
    for i in 0..pts.len() - 1 {
        let h = pts[i + 1] - pts[i];
        let ymid = (ys[i] + ys[i + 1]) * 0.5 + (dys[i] - dys[i + 1]) * (h / 8.0);
        let fmid = sys.rhs(&ymid)?;
        let defect = ys[i + 1] - ys[i] - (dys[i] + fmid * 4.0 + dys[i + 1]) * (h / 6.0);
        ode_residual = ode_residual.max(defect.amax());
    }
    let dist = |a: &HydroState, b: &HydroState| {
        (a.rho - b.rho)
            .abs()
            .max((a.u - b.u).abs())
            .max((a.t - b.t).abs())
    };
    let left_error = dist(&states[0], &frame.v_minus);
    let right_error = dist(states.last().expect("nonempty"), &frame.v_plus);
    Ok(NSProfile {
        frame: *frame,
        grid: pts,
        states,
        derivative,
        macro_states,
        macro_derivative,
        ode_residual,
        left_error,
        right_error,
        unstable_rate: lam,
    })
}

/// How the profile is lifted to velocity space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftMode {
    Continuum,
    Discretized,
}

/// Per-node Hermite coefficients of the lifted profile.
#[derive(Clone, Debug)]
pub struct ProfileField {
    pub grid: Vec<f64>,
    pub coeffs: Vec<DVector<f64>>,
    pub mode: LiftMode,
}

pub fn lift_profile(
    profile: &NSProfile,
    form: &BilinearForm,
    set: &HermiteIndexSet,
    mode: LiftMode,
) -> Result<ProfileField, NsError> {
    let coeffs = match mode {
        LiftMode::Continuum => profile
            .states
            .iter()
            .map(|v| maxwellian_coefficients(*v, set).coeffs)
            .collect(),
        LiftMode::Discretized => {
            let solver = MaxwellianSolver::new(form, set);
            let idx: Vec<usize> = (0..profile.grid.len()).collect();
            let res = ordered_map(&idx, |&i| {
                solver
                    .solve(MacroState {
                        a: profile.macro_states[i],
                    })
                    .map(|d| d.coeffs.coeffs)
                    .map_err(|e| (i, e))
            });
            let mut out = Vec::with_capacity(res.len());
            for r in res {
                out.push(r.map_err(|(node, source)| NsError::LiftFailure { node, source })?);
            }
            out
        }
    };
    Ok(ProfileField {
        grid: profile.grid.clone(),
        coeffs,
        mode,
    })
}

/// Galerkin closure data sampled along a profile.
pub fn sample_galerkin(
    profile: &NSProfile,
    closure: &GalerkinClosure,
) -> Result<Vec<crate::closure::GalerkinState>, NsError> {
    let idx: Vec<usize> = (0..profile.grid.len()).collect();
    let res = ordered_map(&idx, |&i| closure.state(&profile.macro_vec(i)));
    res.into_iter().map(|r| r.map_err(NsError::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    /// `max |J(a) - s a - B(a) a' - const|` over nodes.
    pub flux_invariance: f64,
    /// Fitted exponential decay rates of `|u'|` on the outer third, left and right.
    pub decay_left: f64,
    pub decay_right: f64,
    /// `|u'(0)|`.
    pub center_slope: f64,
    pub max_slope: f64,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

pub fn profile_diagnostics<C: HydroClosure + ?Sized>(
    profile: &NSProfile,
    closure: &C,
) -> Result<ProfileDiagnostics, NsError> {
    let s = profile.frame.speed;
    let c = {
        let am = hydro_to_macro(profile.frame.v_minus);
        closure.flux(&am)? - am * s
    };
    let mut flux_invariance = 0.0f64;
    for i in 0..profile.grid.len() {
        let a = profile.macro_vec(i);
        let (j, b) = closure.evaluate(&a)?;
        let r = j - a * s - b * profile.macro_deriv_vec(i) - c;
        flux_invariance = flux_invariance.max(r.amax());
    }
    let n = profile.grid.len();
    let slopes: Vec<f64> = profile.derivative.iter().map(|d| d[1].abs()).collect();
    let max_slope = slopes.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-11 * max_slope;
    let third = n / 3;
    let collect = |range: std::ops::Range<usize>| {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in range {
            if slopes[i] > floor {
                xs.push(profile.grid[i]);
                ys.push(slopes[i].ln());
            }
        }
        (xs, ys)
    };
    let (xl, yl) = collect(0..third);
    let (xr, yr) = collect(n - third..n);
    let decay_left = if xl.len() >= 2 { fit_slope(&xl, &yl) } else { f64::NAN };
    let decay_right = if xr.len() >= 2 { -fit_slope(&xr, &yr) } else { f64::NAN };
    Ok(ProfileDiagnostics {
        flux_invariance,
        decay_left,
        decay_right,
        center_slope: slopes[profile.center_index()],
        max_slope,
    })
}
