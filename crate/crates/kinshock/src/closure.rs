//! Hydrodynamic closures in macro coordinates `a = (a0, a1, a2)`.
//!
//! A closure supplies the Euler-level flux `J(a)` and the diffusion matrix
//! `B(a)` of the viscous travelling-wave relation `J(a) - s a - B(a) a' = const`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

use crate::chapman_enskog::{diffusion_matrix, CeError, DiffusionMatrix, MicroCorrection, TransportModel};
use crate::collision::{BilinearForm, CollisionError, CollisionTensor, MaxwellianSolver};
use crate::fluid::{euler_flux, from_conserved, FluidError, HydroState};
use crate::hermite::{macro_to_conserved_matrix, xi1_matrix, HermiteIndexSet, MacroState};

#[derive(Debug, Error)]
pub enum ClosureError {
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error(transparent)]
    Transport(#[from] CeError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
}

pub trait HydroClosure: Sync {
    /// `(J(a), B(a))`.
    fn evaluate(&self, a: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>), ClosureError>;

    fn flux(&self, a: &Vector3<f64>) -> Result<Vector3<f64>, ClosureError> {
        self.evaluate(a).map(|x| x.0)
    }

    /// `dJ/da`, by central differences unless overridden.
    fn flux_jacobian(&self, a: &Vector3<f64>) -> Result<Matrix3<f64>, ClosureError> {
        let mut j = Matrix3::zeros();
        for c in 0..3 {
            let h = 1e-6 * a[c].abs().max(1.0);
            let mut p = *a;
            let mut m = *a;
            p[c] += h;
            m[c] -= h;
            let d = (self.flux(&p)? - self.flux(&m)?) / (2.0 * h);
            j.set_column(c, &d);
        }
        Ok(j)
    }
}

/// `d(rho, u, T) / d(a0, a1, a2)`.
pub fn hydro_jacobian(a: &Vector3<f64>) -> Matrix3<f64> {
    let k = 0.5 * 6f64.sqrt();
    let (a0, a1, a2) = (a[0], a[1], a[2]);
    Matrix3::new(
        1.0,
        0.0,
        0.0,
        -a1 / (a0 * a0),
        1.0 / a0,
        0.0,
        -(2.0 * k / 3.0) * a2 / (a0 * a0) + (2.0 / 3.0) * a1 * a1 / (a0 * a0 * a0),
        -(2.0 / 3.0) * a1 / (a0 * a0),
        (2.0 * k / 3.0) / a0,
    )
}

pub fn macro_to_hydro(a: &Vector3<f64>) -> Result<HydroState, FluidError> {
    from_conserved(MacroState::from_vector(a).to_conserved())
}

pub fn hydro_to_macro(v: HydroState) -> Vector3<f64> {
    MacroState::from_hydro(v).to_vector()
}

/// Continuum closure: Euler flux of the Maxwellian and the Chapman-Enskog
/// diffusion matrix with the temperature law of [`TransportModel`].
#[derive(Clone, Debug)]
pub struct EulerClosure {
    pub model: TransportModel,
    c_inv: Matrix3<f64>,
}

impl EulerClosure {
    pub fn new(model: TransportModel) -> Self {
        EulerClosure {
            model,
            c_inv: macro_to_conserved_matrix()
                .try_inverse()
                .expect("invertible coordinate change"),
        }
    }
}

impl HydroClosure for EulerClosure {
    fn evaluate(&self, a: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>), ClosureError> {
        let v = macro_to_hydro(a)?;
        let flux = self.c_inv * euler_flux(v);
        let d = diffusion_matrix(v, &self.model)?;
        Ok((flux, self.c_inv * d.0 * hydro_jacobian(a)))
    }

    fn flux_jacobian(&self, a: &Vector3<f64>) -> Result<Matrix3<f64>, ClosureError> {
        let v = macro_to_hydro(a)?;
        Ok(self.c_inv * crate::fluid::f1_jacobian(v) * hydro_jacobian(a))
    }
}

/// Continuum closure with prescribed transport `mu(T) = mu_ref T^p` and
/// `heat(T) = heat_ref T^p`; needs no collision tensor.
#[derive(Clone, Copy, Debug)]
pub struct PowerLawClosure {
    pub mu_ref: f64,
    pub heat_ref: f64,
    pub exponent: f64,
    c_inv: Matrix3<f64>,
}

impl PowerLawClosure {
    pub fn new(mu_ref: f64, heat_ref: f64, exponent: f64) -> Self {
        PowerLawClosure {
            mu_ref,
            heat_ref,
            exponent,
            c_inv: macro_to_conserved_matrix()
                .try_inverse()
                .expect("invertible coordinate change"),
        }
    }
}

impl HydroClosure for PowerLawClosure {
    fn evaluate(&self, a: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>), ClosureError> {
        let v = macro_to_hydro(a)?;
        let factor = v.t.powf(self.exponent);
        let d = DiffusionMatrix::new(v, self.mu_ref * factor, self.heat_ref * factor);
        Ok((self.c_inv * euler_flux(v), self.c_inv * d.0 * hydro_jacobian(a)))
    }

    fn flux_jacobian(&self, a: &Vector3<f64>) -> Result<Matrix3<f64>, ClosureError> {
        let v = macro_to_hydro(a)?;
        Ok(self.c_inv * crate::fluid::f1_jacobian(v) * hydro_jacobian(a))
    }
}

/// Local data of the Galerkin closure at one macro state.
#[derive(Clone, Debug)]
pub struct GalerkinState {
    pub maxwellian: DVector<f64>,
    pub dm: DMatrix<f64>,
    pub linearized: DMatrix<f64>,
    pub correction: MicroCorrection,
    pub flux: Vector3<f64>,
    pub diffusion: Matrix3<f64>,
}

/// Closure built from the discretized Maxwellian `M(a)`: `J(a) = P(xi_1 M(a))`
/// and `B(a) = -P(xi_1 b_perp(a))`.
#[derive(Clone, Debug)]
pub struct GalerkinClosure {
    pub form: BilinearForm,
    pub set: HermiteIndexSet,
    pub a: DMatrix<f64>,
    e: DMatrix<f64>,
}

impl GalerkinClosure {
    pub fn new(tensor: &CollisionTensor, kappa: f64) -> Self {
        let set = tensor.index_set();
        GalerkinClosure {
            form: tensor.form(kappa),
            a: xi1_matrix(&set),
            e: set.macro_basis(),
            set,
        }
    }

    pub fn state(&self, a: &Vector3<f64>) -> Result<GalerkinState, ClosureError> {
        let solver = MaxwellianSolver::new(&self.form, &self.set);
        let m = solver.solve(MacroState::from_vector(a))?.coeffs.coeffs;
        let dm = solver.derivative(&m)?;
        let l = self.form.linearize(&m);
        let corr = MicroCorrection::new(&l, &dm, &self.a, &self.set)?;
        let f = self.e.transpose() * (&self.a * &m);
        let b = corr.diffusion(&self.a, &self.set);
        Ok(GalerkinState {
            maxwellian: m,
            dm,
            linearized: l,
            correction: corr,
            flux: Vector3::new(f[0], f[1], f[2]),
            diffusion: b,
        })
    }
}

impl HydroClosure for GalerkinClosure {
    fn evaluate(&self, a: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>), ClosureError> {
        let st = self.state(a)?;
        Ok((st.flux, st.diffusion))
    }

    fn flux_jacobian(&self, a: &Vector3<f64>) -> Result<Matrix3<f64>, ClosureError> {
        let solver = MaxwellianSolver::new(&self.form, &self.set);
        let m = solver.solve(MacroState::from_vector(a))?.coeffs.coeffs;
        let dm = solver.derivative(&m)?;
        let j = self.e.transpose() * &self.a * dm;
        Ok(Matrix3::from_fn(|i, k| j[(i, k)]))
    }
}
