//! Nondegenerate reduction of the linearized viscous shock problem in
//! conservative coordinates, and the phase vector built from it.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::Serialize;

use super::BvpError;
use crate::chapman_enskog::TransportModel;
use crate::fluid::{f0_jacobian, f1_jacobian, HydroState};
use crate::hermite::macro_to_conserved_matrix;
use crate::ns_shock::NSProfile;

/// Matrices of the reduced macroscopic ODE at one hydrodynamic state.
#[derive(Clone, Debug, Serialize)]
pub struct MacroOdePack {
    pub state: HydroState,
    pub speed: f64,
    pub mu: f64,
    pub heat: f64,
    /// `f1' (f0')^{-1}`.
    pub a: Matrix3<f64>,
    /// `D (f0')^{-1}` with `D` the diffusion matrix.
    pub b: Matrix3<f64>,
    pub p: Matrix3<f64>,
    /// `a P^{-1}`.
    pub a_tilde: Matrix3<f64>,
    pub b22: Matrix2<f64>,
    /// Reduced 2x2 ODE matrix `m`.
    pub m: Matrix2<f64>,
    /// Columns are eigenvectors of `m` for `(lambda0, lambda_minus)`.
    pub omega: Matrix2<f64>,
    pub lambda0: f64,
    pub lambda_minus: f64,
    /// `(s - u)^2 - c^2`.
    pub eps_hat: f64,
}

impl MacroOdePack {
    /// `3 rho^2 / (2 mu heat) * eps_hat`.
    pub fn det_closed_form(&self) -> f64 {
        3.0 * self.state.rho * self.state.rho / (2.0 * self.mu * self.heat) * self.eps_hat
    }

    pub fn trace_closed_form(&self) -> f64 {
        let (rho, w) = (self.state.rho, self.speed - self.state.u);
        -w * rho * (2.0 / (5.0 * self.mu) + 1.5 / self.heat)
            + 3.0 * rho / (5.0 * self.mu * w) * self.eps_hat
    }

    /// Leading-order asymptotics of `lambda0` in `eps_hat`.
    pub fn lambda0_asymptotic(&self) -> f64 {
        let w = self.speed - self.state.u;
        -15.0 * self.state.rho * self.eps_hat / ((15.0 * self.mu + 4.0 * self.heat) * w)
    }

    pub fn lambda_minus_asymptotic(&self) -> f64 {
        let w = self.speed - self.state.u;
        -w * self.state.rho * (2.0 / (5.0 * self.mu) + 1.5 / self.heat)
    }

    /// The displayed factorization `m = b22^{-1} m0`.
    pub fn m0(&self) -> Matrix2<f64> {
        let (u, t, s) = (self.state.u, self.state.t, self.speed);
        let w = s - u;
        Matrix2::new(
            t / w + u / 3.0 - s,
            2.0 / 3.0,
            s * t / w - 2.0 * u * u / 3.0,
            5.0 * u / 3.0 - s,
        )
    }
}

const SONIC_TOL: f64 = 1e-8;

pub fn transform_p(v: HydroState) -> Matrix3<f64> {
    Matrix3::new(
        1.0,
        0.0,
        0.0,
        -v.u,
        1.0,
        0.0,
        -0.5 * v.u * v.u - 1.5 * v.t,
        0.0,
        1.0,
    )
}

pub fn macro_ode_matrices(
    v: HydroState,
    model: &TransportModel,
    speed: f64,
) -> Result<MacroOdePack, BvpError> {
    let w = speed - v.u;
    if w.abs() <= SONIC_TOL {
        return Err(BvpError::SonicDegeneracy { state: v, speed });
    }
    let (mu, heat) = model.at(v.t)?;
    let f0_inv = f0_jacobian(v)
        .try_inverse()
        .ok_or_else(|| BvpError::Numerical("singular f0 Jacobian".into()))?;
    let a = f1_jacobian(v) * f0_inv;
    let d = Matrix3::new(0.0, 0.0, 0.0, 0.0, mu, 0.0, 0.0, mu * v.u, heat);
    let b = d * f0_inv;
    let p = transform_p(v);
    let p_inv = p.try_inverse().expect("unit lower triangular");
    let a_tilde = a * p_inv;
    let b22 = Matrix2::new(b[(1, 1)], b[(1, 2)], b[(2, 1)], b[(2, 2)]);
    let vv = Vector2::new(-p[(1, 0)], -p[(2, 0)]);
    let a21 = Vector2::new(a_tilde[(1, 0)], a_tilde[(2, 0)]);
    let a12 = Vector2::new(a_tilde[(0, 1)], a_tilde[(0, 2)]).transpose();
    let a22 = Matrix2::new(
        a_tilde[(1, 1)],
        a_tilde[(1, 2)],
        a_tilde[(2, 1)],
        a_tilde[(2, 2)],
    );
    let a11 = a_tilde[(0, 0)];
    let inner = (a21 - vv * speed) * a12 / (speed - a11) - Matrix2::identity() * speed + a22;
    let m = b22
        .try_inverse()
        .ok_or_else(|| BvpError::Numerical("singular b22".into()))?
        * inner;
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        return Err(BvpError::Numerical(format!(
            "reduced macro matrix has complex eigenvalues (discriminant {disc:e})"
        )));
    }
    let sq = disc.sqrt();
    let (r1, r2) = (0.5 * (tr + sq), 0.5 * (tr - sq));
    let (lambda0, lambda_minus) = if r1.abs() <= r2.abs() { (r1, r2) } else { (r2, r1) };
    let eigvec = |lam: f64| {
        let c1 = Vector2::new(m[(0, 1)], lam - m[(0, 0)]);
        let c2 = Vector2::new(lam - m[(1, 1)], m[(1, 0)]);
        let c = if c1.norm() >= c2.norm() { c1 } else { c2 };
        c / c.norm()
    };
    let omega = Matrix2::from_columns(&[eigvec(lambda0), eigvec(lambda_minus)]);
    let c2 = 5.0 * v.t / 3.0;
    Ok(MacroOdePack {
        state: v,
        speed,
        mu,
        heat,
        a,
        b,
        p,
        a_tilde,
        b22,
        m,
        omega,
        lambda0,
        lambda_minus,
        eps_hat: w * w - c2,
    })
}

/// Unit phase vector in macro coordinates, normalized so that its pairing
/// with a macro perturbation extracts the `lambda0` mode at the profile center.
pub fn build_ell(profile: &NSProfile, model: &TransportModel) -> Result<Vector3<f64>, BvpError> {
    let c = profile.center_index();
    let pack = macro_ode_matrices(profile.states[c], model, profile.frame.speed)?;
    let inv_t = pack
        .omega
        .try_inverse()
        .ok_or_else(|| BvpError::Numerical("singular eigenvector matrix".into()))?
        .transpose();
    let mut lt = inv_t * Vector2::new(1.0, 0.0);
    lt /= lt.norm();
    let padded = Vector3::new(0.0, lt[0], lt[1]);
    let ell = macro_to_conserved_matrix().transpose() * (pack.p.transpose() * padded);
    Ok(ell / ell.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_removes_density_coupling() {
        let v = HydroState::new(1.1, 0.2, 0.9).unwrap();
        let f0_inv = f0_jacobian(v).try_inverse().unwrap();
        let (mu, heat) = (0.3, 0.7);
        let d = Matrix3::new(0.0, 0.0, 0.0, 0.0, mu, 0.0, 0.0, mu * v.u, heat);
        let b = d * f0_inv;
        let bp = b * transform_p(v).try_inverse().unwrap();
        for i in 0..3 {
            assert!(bp[(i, 0)].abs() < 1e-14);
        }
    }
}
