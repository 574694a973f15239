//! Burnett functions, transport coefficients and the first-order
//! Chapman-Enskog correction.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{CollisionError, CollisionTensor};
use crate::fluid::HydroState;
use crate::hermite::{HermiteIndexSet, SpectralVector};

#[derive(Debug, Error)]
pub enum CeError {
    #[error("Burnett functions need Hermite degree at least 3, got {0}")]
    DegreeTooSmall(usize),
    #[error("linearized operator is singular on the microscopic subspace")]
    SingularMicroBlock,
    #[error("transport coefficient {name} = {value} is not positive")]
    NonPositiveCoefficient { name: &'static str, value: f64 },
    #[error("Maxwellian derivative unavailable: {0}")]
    JacobianUnavailable(String),
    #[error(transparent)]
    Collision(#[from] CollisionError),
}

/// Coefficients of `Phi M = (xi_1^2 - |xi|^2/3) M` and `Psi M = xi_1 (|xi|^2 - 5) M`.
pub fn burnett_fields(set: &HermiteIndexSet) -> Result<(SpectralVector, SpectralVector), CeError> {
    if set.degree < 3 {
        return Err(CeError::DegreeTooSmall(set.degree));
    }
    let r2 = 2f64.sqrt();
    let mut phi = SpectralVector::zeros(set);
    let mut psi = SpectralVector::zeros(set);
    let pos = |a: [usize; 3]| set.position(&a).expect("degree <= 3 index present");
    phi.coeffs[pos([2, 0, 0])] = 2.0 * r2 / 3.0;
    phi.coeffs[pos([0, 2, 0])] = -r2 / 3.0;
    phi.coeffs[pos([0, 0, 2])] = -r2 / 3.0;
    psi.coeffs[pos([3, 0, 0])] = 6f64.sqrt();
    psi.coeffs[pos([1, 2, 0])] = r2;
    psi.coeffs[pos([1, 0, 2])] = r2;
    Ok((phi, psi))
}

/// Solves `L x = rhs` with `x` and `rhs` restricted to the microscopic subspace.
pub fn micro_solve(
    l: &DMatrix<f64>,
    set: &HermiteIndexSet,
    rhs: &DVector<f64>,
) -> Result<DVector<f64>, CeError> {
    let v = set.micro_basis();
    let block = v.transpose() * l * &v;
    let y = block
        .lu()
        .solve(&(v.transpose() * rhs))
        .ok_or(CeError::SingularMicroBlock)?;
    let x = &v * y;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(CeError::SingularMicroBlock);
    }
    Ok(x)
}

/// Microscopic solutions of `L x = -Phi M` and `L y = -Psi M`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertedBurnett {
    pub phi: SpectralVector,
    pub psi: SpectralVector,
    pub phi_tilde: SpectralVector,
    pub psi_tilde: SpectralVector,
    pub residual: f64,
}

pub fn invert_burnett(l: &DMatrix<f64>, set: &HermiteIndexSet) -> Result<InvertedBurnett, CeError> {
    let (phi, psi) = burnett_fields(set)?;
    let x = micro_solve(l, set, &(-&phi.coeffs))?;
    let y = micro_solve(l, set, &(-&psi.coeffs))?;
    let residual = (l * &x + &phi.coeffs).norm().max((l * &y + &psi.coeffs).norm());
    Ok(InvertedBurnett {
        phi_tilde: SpectralVector {
            degree: set.degree,
            coeffs: x,
        },
        psi_tilde: SpectralVector {
            degree: set.degree,
            coeffs: y,
        },
        phi,
        psi,
        residual,
    })
}

/// Reference viscosity and heat conductivity at unit temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportCoeffs {
    pub mu_tilde: f64,
    pub kappa_tilde: f64,
    pub gamma: f64,
    pub s: f64,
    pub kappa: f64,
}

/// `mu = <Phi M, Phi~>` and `kappa = <Psi M, Psi~> / 4`.
pub fn transport_coeffs(
    inv: &InvertedBurnett,
    gamma: f64,
    s: f64,
    kappa: f64,
) -> Result<TransportCoeffs, CeError> {
    let mu = inv.phi.coeffs.dot(&inv.phi_tilde.coeffs);
    let heat = 0.25 * inv.psi.coeffs.dot(&inv.psi_tilde.coeffs);
    if !(mu > 0.0) {
        return Err(CeError::NonPositiveCoefficient {
            name: "mu_tilde",
            value: mu,
        });
    }
    if !(heat > 0.0) {
        return Err(CeError::NonPositiveCoefficient {
            name: "kappa_tilde",
            value: heat,
        });
    }
    Ok(TransportCoeffs {
        mu_tilde: mu,
        kappa_tilde: heat,
        gamma,
        s,
        kappa,
    })
}

/// Temperature-dependent transport law
/// `mu_k(T) = T^{1-gamma/2} mu~(T^{1-s-gamma/2} k)` and likewise for the heat conductivity.
///
/// The reference coefficients at a rescaled lift weight are obtained from a
/// Burnett solve with `L = L0 + k L1` and memoized.
#[derive(Debug)]
pub struct TransportModel {
    pub coeffs: TransportCoeffs,
    set: HermiteIndexSet,
    l_main: DMatrix<f64>,
    l_lift: DMatrix<f64>,
    memo: Mutex<HashMap<u64, (f64, f64)>>,
}

impl Clone for TransportModel {
    fn clone(&self) -> Self {
        TransportModel {
            coeffs: self.coeffs,
            set: self.set.clone(),
            l_main: self.l_main.clone(),
            l_lift: self.l_lift.clone(),
            memo: Mutex::new(self.memo.lock().map(|m| m.clone()).unwrap_or_default()),
        }
    }
}

fn memo_key(k: f64) -> u64 {
    let r = format!("{:.11e}", k);
    r.parse::<f64>().unwrap_or(k).to_bits()
}

impl TransportModel {
    pub fn new(tensor: &CollisionTensor, kappa: f64) -> Result<Self, CeError> {
        let set = tensor.index_set();
        let m = SpectralVector::reference_maxwellian(&set);
        let l_main = tensor.main.linearize(&m.coeffs);
        let l_lift = tensor.lift.linearize(&m.coeffs);
        let l = &l_main + &l_lift * kappa;
        let inv = invert_burnett(&l, &set)?;
        let coeffs = transport_coeffs(&inv, tensor.gamma, tensor.s, kappa)?;
        let mut memo = HashMap::new();
        memo.insert(memo_key(kappa), (coeffs.mu_tilde, coeffs.kappa_tilde));
        Ok(TransportModel {
            coeffs,
            set,
            l_main,
            l_lift,
            memo: Mutex::new(memo),
        })
    }

    /// Reference coefficients `(mu~, kappa~)` for lift weight `k`, solved afresh.
    pub fn reference_direct(&self, k: f64) -> Result<(f64, f64), CeError> {
        let l = &self.l_main + &self.l_lift * k;
        let inv = invert_burnett(&l, &self.set)?;
        let c = transport_coeffs(&inv, self.coeffs.gamma, self.coeffs.s, k)?;
        Ok((c.mu_tilde, c.kappa_tilde))
    }

    /// Memoized reference coefficients at lift weight `k`.
    pub fn reference(&self, k: f64) -> Result<(f64, f64), CeError> {
        let key = memo_key(k);
        if let Some(v) = self.memo.lock().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(v);
        }
        let v = self.reference_direct(k)?;
        if let Ok(mut m) = self.memo.lock() {
            m.insert(key, v);
        }
        Ok(v)
    }

    fn rescaled_kappa(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        t.powf(1.0 - c.s - 0.5 * c.gamma) * c.kappa
    }

    /// `(mu_k(T), kappa_k(T))`.
    pub fn at(&self, t: f64) -> Result<(f64, f64), CeError> {
        let c = &self.coeffs;
        let factor = t.powf(1.0 - 0.5 * c.gamma);
        let (m, h) = if c.kappa == 0.0 {
            (c.mu_tilde, c.kappa_tilde)
        } else {
            self.reference(self.rescaled_kappa(t))?
        };
        Ok((factor * m, factor * h))
    }

    /// Same as [`TransportModel::at`] but bypassing the memo.
    pub fn at_direct(&self, t: f64) -> Result<(f64, f64), CeError> {
        let c = &self.coeffs;
        let factor = t.powf(1.0 - 0.5 * c.gamma);
        let (m, h) = self.reference_direct(self.rescaled_kappa(t))?;
        Ok((factor * m, factor * h))
    }

    pub fn mu(&self, t: f64) -> Result<f64, CeError> {
        self.at(t).map(|x| x.0)
    }

    pub fn heat(&self, t: f64) -> Result<f64, CeError> {
        self.at(t).map(|x| x.1)
    }
}

/// Diffusion matrix acting on `d/dx (rho, u, T)`; rows are the mass, momentum
/// and energy flux corrections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionMatrix(pub Matrix3<f64>);

impl DiffusionMatrix {
    /// Diffusion matrix at `v` for viscosity `mu` and heat conductivity `heat`.
    pub fn new(v: HydroState, mu: f64, heat: f64) -> Self {
        DiffusionMatrix(Matrix3::new(0.0, 0.0, 0.0, 0.0, mu, 0.0, 0.0, mu * v.u, heat))
    }
}

pub fn diffusion_matrix(v: HydroState, model: &TransportModel) -> Result<DiffusionMatrix, CeError> {
    let (mu, heat) = model.at(v.t)?;
    Ok(DiffusionMatrix::new(v, mu, heat))
}

/// Linear map from `d/dx` of the macro coordinates to the microscopic correction.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroCorrection {
    /// `dim x 3` matrix `L^{-1} (I - P_U) (A dM_U)`.
    pub b_perp: DMatrix<f64>,
}

impl MicroCorrection {
    /// `l` is the linearized collision matrix at the background Maxwellian,
    /// `dm` its derivative in macro coordinates and `a` the matrix of `Pi_N xi_1 Pi_N`.
    pub fn new(
        l: &DMatrix<f64>,
        dm: &DMatrix<f64>,
        a: &DMatrix<f64>,
        set: &HermiteIndexSet,
    ) -> Result<Self, CeError> {
        if dm.ncols() != 3 || dm.nrows() != set.dim() {
            return Err(CeError::JacobianUnavailable(format!(
                "derivative has shape {}x{}",
                dm.nrows(),
                dm.ncols()
            )));
        }
        let e = set.macro_basis();
        let adm = a * dm;
        let proj = &adm - dm * (e.transpose() * &adm);
        let v = set.micro_basis();
        let block = v.transpose() * l * &v;
        let lu = block.lu();
        let y = lu
            .solve(&(v.transpose() * proj))
            .ok_or(CeError::SingularMicroBlock)?;
        Ok(MicroCorrection { b_perp: v * y })
    }

    pub fn apply(&self, da: &nalgebra::Vector3<f64>) -> DVector<f64> {
        &self.b_perp * da
    }

    /// Diffusion matrix in macro coordinates, `B = -P (xi_1 b_perp)`.
    pub fn diffusion(&self, a: &DMatrix<f64>, set: &HermiteIndexSet) -> Matrix3<f64> {
        let e = set.macro_basis();
        let m = -(e.transpose() * a * &self.b_perp);
        Matrix3::from_fn(|i, j| m[(i, j)])
    }
}

/// `f_perp = b_perp d/dx(macro)` at a background Maxwellian given by its
/// coefficients, computed from the tensor at lift weight `kappa`.
pub fn micro_correction(
    tensor: &CollisionTensor,
    kappa: f64,
    background: &SpectralVector,
    dm: &DMatrix<f64>,
    du_dx: &nalgebra::Vector3<f64>,
) -> Result<SpectralVector, CeError> {
    let set = tensor.index_set();
    let form = tensor.form(kappa);
    let l = form.linearize(&background.coeffs);
    let a = crate::hermite::xi1_matrix(&set);
    let mc = MicroCorrection::new(&l, dm, &a, &set)?;
    Ok(SpectralVector {
        degree: set.degree,
        coeffs: mc.apply(du_dx),
    })
}
