//! Euler-level fluid machinery: coordinate maps, fluxes, characteristic
//! fields and the Rankine-Hugoniot 3-shock curve.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),
    #[error("shock amplitude {0} outside (0, 0.2]")]
    InvalidAmplitude(f64),
    #[error("Newton iteration diverged; residual history {history:?}")]
    NewtonDivergence { history: Vec<f64> },
    #[error("Lax condition violated: lambda3(V+)={lam_plus}, s={speed}, lambda3(V-)={lam_minus}")]
    LaxViolation {
        lam_plus: f64,
        speed: f64,
        lam_minus: f64,
    },
}

/// Hydrodynamic variables `(rho, u, T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HydroState {
    pub rho: f64,
    pub u: f64,
    pub t: f64,
}

/// Conservative variables `(rho, m, E)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedState {
    pub rho: f64,
    pub m: f64,
    pub e: f64,
}

impl HydroState {
    pub const REFERENCE: HydroState = HydroState {
        rho: 1.0,
        u: 0.0,
        t: 1.0,
    };

    /// Builds a state, rejecting non-positive density or temperature.
    pub fn new(rho: f64, u: f64, t: f64) -> Result<Self, FluidError> {
        let v = HydroState { rho, u, t };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<(), FluidError> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(FluidError::NonPhysicalState(format!("density {}", self.rho)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(FluidError::NonPhysicalState(format!("temperature {}", self.t)));
        }
        if !self.u.is_finite() {
            return Err(FluidError::NonPhysicalState(format!("velocity {}", self.u)));
        }
        Ok(())
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.rho, self.u, self.t)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        HydroState {
            rho: v[0],
            u: v[1],
            t: v[2],
        }
    }

    pub fn sound_speed(&self) -> f64 {
        (5.0 * self.t / 3.0).sqrt()
    }

    pub fn lambda3(&self) -> f64 {
        self.u + self.sound_speed()
    }
}

impl ConservedState {
    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.rho, self.m, self.e)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        ConservedState {
            rho: v[0],
            m: v[1],
            e: v[2],
        }
    }
}

/// `f0(V) = (rho, rho u, rho u^2/2 + 3 rho T/2)`.
pub fn to_conserved(v: HydroState) -> ConservedState {
    ConservedState {
        rho: v.rho,
        m: v.rho * v.u,
        e: 0.5 * v.rho * v.u * v.u + 1.5 * v.rho * v.t,
    }
}

/// Inverse of [`to_conserved`].
pub fn from_conserved(w: ConservedState) -> Result<HydroState, FluidError> {
    if !(w.rho > 0.0) {
        return Err(FluidError::NonPhysicalState(format!("density {}", w.rho)));
    }
    let u = w.m / w.rho;
    let internal = w.e - 0.5 * w.m * w.m / w.rho;
    if !(internal > 0.0) {
        return Err(FluidError::NonPhysicalState(format!(
            "internal energy {internal}"
        )));
    }
    Ok(HydroState {
        rho: w.rho,
        u,
        t: internal / (1.5 * w.rho),
    })
}

/// Euler flux `f1(V) = (rho u, rho u^2 + rho T, rho u^3/2 + 5 rho u T/2)`.
pub fn euler_flux(v: HydroState) -> Vector3<f64> {
    let HydroState { rho, u, t } = v;
    Vector3::new(
        rho * u,
        rho * u * u + rho * t,
        0.5 * rho * u * u * u + 2.5 * rho * u * t,
    )
}

/// Jacobian of `f0` with respect to `(rho, u, T)`.
pub fn f0_jacobian(v: HydroState) -> Matrix3<f64> {
    let HydroState { rho, u, t } = v;
    Matrix3::new(
        1.0,
        0.0,
        0.0,
        u,
        rho,
        0.0,
        0.5 * u * u + 1.5 * t,
        rho * u,
        1.5 * rho,
    )
}

/// Jacobian of `f1` with respect to `(rho, u, T)`.
pub fn f1_jacobian(v: HydroState) -> Matrix3<f64> {
    let HydroState { rho, u, t } = v;
    Matrix3::new(
        u,
        rho,
        0.0,
        u * u + t,
        2.0 * rho * u,
        rho,
        0.5 * u * u * u + 2.5 * u * t,
        1.5 * rho * u * u + 2.5 * rho * t,
        2.5 * rho * u,
    )
}

/// Characteristic speeds and right eigenvectors in `(rho, u, T)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CharFields {
    pub lambdas: [f64; 3],
    pub rvecs: [Vector3<f64>; 3],
    pub c: f64,
}

impl CharFields {
    /// Largest generalized eigen-residual `|(lambda_i f0' - f1') r_i|`.
    pub fn max_residual(&self, v: HydroState) -> f64 {
        let a0 = f0_jacobian(v);
        let a1 = f1_jacobian(v);
        (0..3)
            .map(|i| ((a0 * self.lambdas[i] - a1) * self.rvecs[i]).norm())
            .fold(0.0, f64::max)
    }
}

pub fn char_fields(v: HydroState) -> CharFields {
    let c = v.sound_speed();
    let HydroState { rho, u, t } = v;
    let q = 1.0 / (4.0 * c);
    CharFields {
        lambdas: [u - c, u, u + c],
        rvecs: [
            Vector3::new(-3.0 * rho * q, 3.0 * c * q, -2.0 * t * q),
            Vector3::new(-3.0 * rho, 0.0, 3.0 * t),
            Vector3::new(3.0 * rho * q, 3.0 * c * q, 2.0 * t * q),
        ],
        c,
    }
}

/// Endpoints and speed of a 3-shock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RHSolution {
    pub v_minus: HydroState,
    pub v_plus: HydroState,
    pub speed: f64,
    pub epsilon: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Jump residual `f1(V-) - f1(V+) - s (f0(V-) - f0(V+))`.
pub fn rh_residual(v_minus: HydroState, v_plus: HydroState, s: f64) -> Vector3<f64> {
    euler_flux(v_minus) - euler_flux(v_plus)
        - (to_conserved(v_minus).to_vector() - to_conserved(v_plus).to_vector()) * s
}

fn rh_system(v_minus: HydroState, epsilon: f64, x: &Vector4<f64>) -> Vector4<f64> {
    let vp = HydroState {
        rho: x[0],
        u: x[1],
        t: x[2],
    };
    let r = rh_residual(v_minus, vp, x[3]);
    let lam = if vp.t > 0.0 { vp.lambda3() } else { f64::NAN };
    Vector4::new(r[0], r[1], r[2], lam - v_minus.lambda3() + epsilon)
}

fn rh_jacobian(v_minus: HydroState, x: &Vector4<f64>) -> Matrix4<f64> {
    let vp = HydroState {
        rho: x[0],
        u: x[1],
        t: x[2],
    };
    let s = x[3];
    let block = f0_jacobian(vp) * s - f1_jacobian(vp);
    let ds = -(to_conserved(v_minus).to_vector() - to_conserved(vp).to_vector());
    let mut j = Matrix4::zeros();
    for i in 0..3 {
        for k in 0..3 {
            j[(i, k)] = block[(i, k)];
        }
        j[(i, 3)] = ds[i];
    }
    j[(3, 1)] = 1.0;
    j[(3, 2)] = 5.0 / (6.0 * vp.sound_speed());
    j
}

/// Solves the Rankine-Hugoniot conditions along the 3-shock curve with
/// `lambda3(V+) = lambda3(V-) - epsilon`.
pub fn rh_solve(v_minus: HydroState, epsilon: f64) -> Result<RHSolution, FluidError> {
    v_minus.validate()?;
    if !(0.0..=0.2).contains(&epsilon) || !epsilon.is_finite() {
        return Err(FluidError::InvalidAmplitude(epsilon));
    }
    let lam_minus = v_minus.lambda3();
    if epsilon == 0.0 {
        return Ok(RHSolution {
            v_minus,
            v_plus: v_minus,
            speed: lam_minus,
            epsilon,
            residual: 0.0,
            iterations: 0,
        });
    }
    let r3 = char_fields(v_minus).rvecs[2];
    let guess = v_minus.to_vector() - r3 * epsilon;
    let mut x = Vector4::new(guess[0], guess[1], guess[2], lam_minus - 0.5 * epsilon);
    let mut f = rh_system(v_minus, epsilon, &x);
    let mut history = vec![f.norm()];
    let mut iterations = 0;
    while f.norm() > 1e-13 {
        if iterations >= 50 {
            return Err(FluidError::NewtonDivergence { history });
        }
        iterations += 1;
        let step = rh_jacobian(v_minus, &x)
            .lu()
            .solve(&f)
            .ok_or_else(|| FluidError::NewtonDivergence {
                history: history.clone(),
            })?;
        let mut lambda = 1.0;
        let current = f.norm();
        loop {
            let trial = x - step * lambda;
            let ft = rh_system(v_minus, epsilon, &trial);
            if ft.norm().is_finite() && (ft.norm() < current || lambda < 1e-3) {
                x = trial;
                f = ft;
                break;
            }
            lambda *= 0.5;
        }
        history.push(f.norm());
        if history.len() > 3 && f.norm() >= current && current < 1e-12 {
            break;
        }
    }
    let v_plus = HydroState {
        rho: x[0],
        u: x[1],
        t: x[2],
    };
    v_plus.validate()?;
    let speed = x[3];
    let lam_plus = v_plus.lambda3();
    if !(lam_plus <= speed && speed <= lam_minus) {
        return Err(FluidError::LaxViolation {
            lam_plus,
            speed,
            lam_minus,
        });
    }
    Ok(RHSolution {
        v_minus,
        v_plus,
        speed,
        epsilon,
        residual: rh_residual(v_minus, v_plus, speed).norm(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let w = to_conserved(HydroState::REFERENCE);
        assert_eq!((w.rho, w.m, w.e), (1.0, 0.0, 1.5));
        let f = euler_flux(HydroState::REFERENCE);
        assert_eq!((f[0], f[1], f[2]), (0.0, 1.0, 0.0));
        let cf = char_fields(HydroState::REFERENCE);
        assert!((cf.c - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((cf.rvecs[2][0] - 0.580_947_501_931_113).abs() < 1e-12);
        assert!(cf.max_residual(HydroState::REFERENCE) < 1e-14);
    }

    #[test]
    fn conserved_inverse_examples() {
        let v = from_conserved(ConservedState { rho: 1.0, m: 1.0, e: 1.0 }).unwrap();
        assert!((v.u - 1.0).abs() < 1e-15 && (v.t - 1.0 / 3.0).abs() < 1e-15);
        assert!(from_conserved(ConservedState { rho: 1.0, m: 0.0, e: -1.0 }).is_err());
    }

    #[test]
    fn rh_small_shock() {
        let sol = rh_solve(HydroState::REFERENCE, 0.01).unwrap();
        assert!(sol.residual < 1e-12);
        assert!((sol.speed - 1.285_994_4).abs() < 1e-3);
        let zero = rh_solve(HydroState::REFERENCE, 0.0).unwrap();
        assert_eq!(zero.v_plus, HydroState::REFERENCE);
    }
}
