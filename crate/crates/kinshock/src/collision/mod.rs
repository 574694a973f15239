//! Galerkin discretization of the non-cutoff collision operator.
//!
//! The tensor `T[k][a][b]` holds `<Q(psi_a, psi_b), psi_k>` symmetrized in
//! `(a, b)`, so `Q(g, f)_k = sum T[k][a][b] g_a f_b` is the symmetric part of the
//! bilinear operator. Every use downstream (quadratic terms, linearizations)
//! only sees that symmetric part.

mod assembly;
mod cache;
mod maxwellian;
mod spectral;

pub use assembly::{assemble_part, assemble_tensor, AngularRule};
pub use cache::{load_tensor, load_or_assemble, save_tensor, CacheError, CACHE_MAGIC, CACHE_VERSION};
pub use maxwellian::{discretized_maxwellian, maxwellian_jacobian, DiscretizedMaxwellian, MaxwellianSolver};
pub use spectral::{spectral_gap, GapReport};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hermite::{build_index_set, HermiteError, HermiteIndexSet, SpectralVector};

#[derive(Debug, Error)]
pub enum CollisionError {
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("invalid quadrature configuration: {0}")]
    QuadratureConfigInvalid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Newton iteration for the discretized Maxwellian did not converge; residuals {residuals:?}")]
    NewtonDivergence { residuals: Vec<f64> },
    #[error("eigen solver failure: {0}")]
    EigSolverFailure(String),
    #[error(transparent)]
    Hermite(#[from] HermiteError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// Collision kernel `|v|^gamma b(cos theta)` with `b(cos theta) sin theta = c_b theta^{-1-2s}`
/// on `(0, pi/2]`, plus the weight of the lifted operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma: f64,
    pub s: f64,
    pub c_b: f64,
    pub kappa: f64,
}

impl KernelParams {
    pub fn new(gamma: f64, s: f64, kappa: f64) -> Result<Self, CollisionError> {
        let p = KernelParams {
            gamma,
            s,
            c_b: 1.0,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CollisionError> {
        let mut bad = Vec::new();
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            bad.push(format!("gamma = {} outside (0, 1)", self.gamma));
        }
        if !(self.s > 0.0 && self.s < 0.5) {
            bad.push(format!("s = {} outside (0, 1/2)", self.s));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            bad.push(format!("kappa = {} must be non-negative", self.kappa));
        }
        if !(self.c_b > 0.0 && self.c_b.is_finite()) {
            bad.push(format!("c_b = {} must be positive", self.c_b));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CollisionError::InvalidParams(bad.join("; ")))
        }
    }

    /// Exponents of the inverse power law `phi(r) ~ r^{1-p}`.
    pub fn power_law(p: f64, kappa: f64) -> Result<Self, CollisionError> {
        Self::new((p - 5.0) / (p - 1.0), 1.0 / (p - 1.0), kappa)
    }
}

/// Node counts of the weak-form quadrature.
///
/// Centre of mass `G` uses tensor Gauss-Hermite, the relative speed a
/// generalized Gauss-Laguerre rule, the relative direction a product
/// Gauss-Legendre x uniform rule, the deflection angle a Gauss-Jacobi rule
/// carrying the `theta^{1-2s}` weight and the azimuth a uniform rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub g_order: u32,
    pub r_order: u32,
    pub omega_polar: u32,
    pub omega_azimuth: u32,
    pub theta_nodes: u32,
    pub phi_nodes: u32,
}

impl QuadratureConfig {
    /// Smallest orders that integrate every polynomial factor exactly, plus one
    /// node of margin on the radial rule.
    pub fn for_degree(n: usize) -> Self {
        let n = n as u32;
        let poly = 3 * n;
        let even = |k: u32| k + (k % 2);
        QuadratureConfig {
            g_order: (poly + 2) / 2,
            r_order: (poly / 2 + 2) / 2 + 1,
            omega_polar: (poly + 2) / 2,
            omega_azimuth: even(poly + 1),
            theta_nodes: 16,
            phi_nodes: (n + 2).max(12),
        }
    }

    pub fn doubled(&self) -> Self {
        QuadratureConfig {
            g_order: 2 * self.g_order,
            r_order: 2 * self.r_order,
            omega_polar: 2 * self.omega_polar,
            omega_azimuth: 2 * self.omega_azimuth,
            theta_nodes: 2 * self.theta_nodes,
            phi_nodes: 2 * self.phi_nodes,
        }
    }

    pub fn validate(&self, degree: usize) -> Result<(), CollisionError> {
        let min = Self::for_degree(degree);
        let mut bad = Vec::new();
        let mut check = |name: &str, got: u32, need: u32| {
            if got < need {
                bad.push(format!("{name} = {got} below minimum {need}"));
            }
        };
        check("g_order", self.g_order, min.g_order);
        check("r_order", self.r_order, min.r_order - 1);
        check("omega_polar", self.omega_polar, min.omega_polar);
        check("omega_azimuth", self.omega_azimuth, min.omega_azimuth);
        check("theta_nodes", self.theta_nodes, 4);
        check("phi_nodes", self.phi_nodes, degree as u32 + 1);
        if self.omega_azimuth % 2 != 0 {
            bad.push("omega_azimuth must be even".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CollisionError::QuadratureConfigInvalid(bad.join("; ")))
        }
    }

    pub fn as_array(&self) -> [u32; 6] {
        [
            self.g_order,
            self.r_order,
            self.omega_polar,
            self.omega_azimuth,
            self.theta_nodes,
            self.phi_nodes,
        ]
    }

    pub fn from_array(a: [u32; 6]) -> Self {
        QuadratureConfig {
            g_order: a[0],
            r_order: a[1],
            omega_polar: a[2],
            omega_azimuth: a[3],
            theta_nodes: a[4],
            phi_nodes: a[5],
        }
    }
}

/// A symmetric bilinear form `(g, f) -> sum T[k][a][b] g_a f_b` on coefficient vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearForm {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl BilinearForm {
    #[inline]
    pub fn entry(&self, k: usize, a: usize, b: usize) -> f64 {
        self.data[(k * self.dim + a) * self.dim + b]
    }

    pub fn apply(&self, g: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for k in 0..n {
            let block = &self.data[k * n * n..(k + 1) * n * n];
            let mut acc = 0.0;
            for a in 0..n {
                let ga = g[a];
                if ga == 0.0 {
                    continue;
                }
                let row = &block[a * n..(a + 1) * n];
                let mut inner = 0.0;
                for b in 0..n {
                    inner += row[b] * f[b];
                }
                acc += ga * inner;
            }
            out[k] = acc;
        }
        out
    }

    /// Matrix of `f -> Q(g, f) + Q(f, g)`.
    pub fn linearize(&self, g: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            let block = &self.data[k * n * n..(k + 1) * n * n];
            for a in 0..n {
                let ga = 2.0 * g[a];
                if ga == 0.0 {
                    continue;
                }
                for b in 0..n {
                    m[(k, b)] += ga * block[a * n + b];
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Main and lift tensors over a Hermite index set.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionTensor {
    pub degree: usize,
    pub gamma: f64,
    pub s: f64,
    pub quad: QuadratureConfig,
    pub main: BilinearForm,
    pub lift: BilinearForm,
}

impl CollisionTensor {
    pub fn dim(&self) -> usize {
        self.main.dim
    }

    pub fn index_set(&self) -> HermiteIndexSet {
        build_index_set(self.degree).expect("tensor degree is valid")
    }

    /// Bilinear form of `Q_kappa = Q + kappa Q_lift`.
    pub fn form(&self, kappa: f64) -> BilinearForm {
        if kappa == 0.0 {
            return self.main.clone();
        }
        BilinearForm {
            dim: self.main.dim,
            data: self
                .main
                .data
                .iter()
                .zip(&self.lift.data)
                .map(|(m, l)| m + kappa * l)
                .collect(),
        }
    }

    fn check(&self, v: &DVector<f64>) -> Result<(), CollisionError> {
        if v.len() != self.dim() {
            return Err(CollisionError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// `Q_kappa(g, f)` in coefficient space.
pub fn apply_q(
    tensor: &CollisionTensor,
    kappa: f64,
    g: &SpectralVector,
    f: &SpectralVector,
) -> Result<SpectralVector, CollisionError> {
    tensor.check(&g.coeffs)?;
    tensor.check(&f.coeffs)?;
    let mut out = tensor.main.apply(&g.coeffs, &f.coeffs);
    if kappa != 0.0 {
        out += tensor.lift.apply(&g.coeffs, &f.coeffs) * kappa;
    }
    Ok(SpectralVector {
        degree: tensor.degree,
        coeffs: out,
    })
}

/// Matrix of `f -> Q_kappa(g, f) + Q_kappa(f, g)` at the background `g`.
pub fn linearized_matrix(
    tensor: &CollisionTensor,
    kappa: f64,
    background: &SpectralVector,
) -> Result<DMatrix<f64>, CollisionError> {
    tensor.check(&background.coeffs)?;
    let mut m = tensor.main.linearize(&background.coeffs);
    if kappa != 0.0 {
        m += tensor.lift.linearize(&background.coeffs) * kappa;
    }
    Ok(m)
}

#[cfg(feature = "parallel")]
pub fn ordered_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn ordered_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}
