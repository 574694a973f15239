//! Symmetric Hermite basis of velocity space.
//!
//! The basis functions are `psi_a(xi) = h_a(xi) M(xi)` with `M` the reference
//! Maxwellian `(2 pi)^{-3/2} exp(-|xi|^2/2)` and `h_a` the tensor product of
//! normalized probabilists' Hermite polynomials `He_n / sqrt(n!)`. They are
//! orthonormal for `<f, g> = int f g / M`. Only multi-indices with even second
//! and third entries are kept, i.e. functions even in `xi_2` and `xi_3`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluid::{ConservedState, HydroState};
use crate::quadrature::gauss_hermite_normal;

pub type MultiIndex = [usize; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HermiteError {
    #[error("Hermite degree {0} is below the minimum 2")]
    DegreeTooSmall(usize),
    #[error("incompatible index sets: source degree {source_degree}, target degree {target_degree}")]
    IncompatibleSets {
        source_degree: usize,
        target_degree: usize,
    },
    #[error("coefficient length {got} does not match index set dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Ordered multi-indices `|a| <= N` with `a_2`, `a_3` even.
///
/// Indices are sorted lexicographically by `(|a|, a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermiteIndexSet {
    pub degree: usize,
    pub indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

pub fn build_index_set(degree: usize) -> Result<HermiteIndexSet, HermiteError> {
    if degree < 2 {
        return Err(HermiteError::DegreeTooSmall(degree));
    }
    let mut indices = Vec::new();
    for total in 0..=degree {
        let mut level = Vec::new();
        for a2 in (0..=total).step_by(2) {
            for a3 in (0..=total - a2).step_by(2) {
                level.push([total - a2 - a3, a2, a3]);
            }
        }
        level.sort();
        indices.extend(level);
    }
    let lookup = indices.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    Ok(HermiteIndexSet {
        degree,
        indices,
        lookup,
    })
}

impl HermiteIndexSet {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub fn order(alpha: &MultiIndex) -> usize {
        alpha[0] + alpha[1] + alpha[2]
    }

    /// Positions of `(0,0,0)`, `(1,0,0)` and the three degree-2 diagonal indices.
    pub fn macro_positions(&self) -> MacroPositions {
        let p = |a: MultiIndex| self.position(&a).expect("macro index present");
        MacroPositions {
            mass: p([0, 0, 0]),
            momentum: p([1, 0, 0]),
            diag: [p([2, 0, 0]), p([0, 2, 0]), p([0, 0, 2])],
        }
    }

    /// Orthonormal coefficient vectors of `psi_0, psi_1, psi_2` as the columns of a
    /// `dim x 3` matrix (the embedding of the macroscopic space).
    pub fn macro_basis(&self) -> DMatrix<f64> {
        let mp = self.macro_positions();
        let mut e = DMatrix::zeros(self.dim(), 3);
        e[(mp.mass, 0)] = 1.0;
        e[(mp.momentum, 1)] = 1.0;
        let w = 1.0 / 3f64.sqrt();
        for &d in &mp.diag {
            e[(d, 2)] = w;
        }
        e
    }

    /// Orthogonal projector onto the microscopic complement.
    pub fn micro_projector(&self) -> DMatrix<f64> {
        let e = self.macro_basis();
        DMatrix::identity(self.dim(), self.dim()) - &e * e.transpose()
    }

    /// Orthonormal basis of the microscopic complement (`dim x (dim-3)`).
    pub fn micro_basis(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mp = self.macro_positions();
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n - 3);
        for i in 0..n {
            if i == mp.mass || i == mp.momentum || mp.diag.contains(&i) {
                continue;
            }
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            cols.push(v);
        }
        let s = 1.0 / 2f64.sqrt();
        let mut v1 = DVector::zeros(n);
        v1[mp.diag[0]] = s;
        v1[mp.diag[1]] = -s;
        cols.push(v1);
        let t = 1.0 / 6f64.sqrt();
        let mut v2 = DVector::zeros(n);
        v2[mp.diag[0]] = t;
        v2[mp.diag[1]] = t;
        v2[mp.diag[2]] = -2.0 * t;
        cols.push(v2);
        DMatrix::from_columns(&cols)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacroPositions {
    pub mass: usize,
    pub momentum: usize,
    pub diag: [usize; 3],
}

/// Normalized Hermite values `h_0(x), ..., h_nmax(x)` written into `out`.
#[inline]
pub fn hermite_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (x * out[n] - nf.sqrt() * out[n - 1]) / (nf + 1.0).sqrt();
    }
}

/// Reference Maxwellian `(2 pi)^{-3/2} exp(-|xi|^2 / 2)`.
pub fn reference_maxwellian(xi: &[f64; 3]) -> f64 {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    (2.0 * std::f64::consts::PI).powf(-1.5) * (-0.5 * r2).exp()
}

/// Polynomial factor `h_a(xi)`.
pub fn eval_poly(alpha: &MultiIndex, xi: &[f64; 3]) -> f64 {
    let mut prod = 1.0;
    for d in 0..3 {
        let mut buf = vec![0.0; alpha[d] + 1];
        hermite_values(xi[d], &mut buf);
        prod *= buf[alpha[d]];
    }
    prod
}

/// Hermite function `psi_a(xi) = h_a(xi) M(xi)`.
pub fn eval_basis(alpha: &MultiIndex, xi: &[f64; 3]) -> f64 {
    eval_poly(alpha, xi) * reference_maxwellian(xi)
}

/// Coefficients over a [`HermiteIndexSet`] of degree `degree`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralVector {
    pub degree: usize,
    pub coeffs: DVector<f64>,
}

impl SpectralVector {
    pub fn new(set: &HermiteIndexSet, coeffs: DVector<f64>) -> Result<Self, HermiteError> {
        if coeffs.len() != set.dim() {
            return Err(HermiteError::DimensionMismatch {
                expected: set.dim(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralVector {
            degree: set.degree,
            coeffs,
        })
    }

    pub fn zeros(set: &HermiteIndexSet) -> Self {
        SpectralVector {
            degree: set.degree,
            coeffs: DVector::zeros(set.dim()),
        }
    }

    /// Coefficient vector of the reference Maxwellian, `psi_0`.
    pub fn reference_maxwellian(set: &HermiteIndexSet) -> Self {
        let mut v = Self::zeros(set);
        v.coeffs[0] = 1.0;
        v
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Pointwise value of the represented distribution.
    pub fn evaluate(&self, set: &HermiteIndexSet, xi: &[f64; 3]) -> f64 {
        let n = set.degree + 1;
        let mut h = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for d in 0..3 {
            hermite_values(xi[d], &mut h[d]);
        }
        let poly: f64 = set
            .indices
            .iter()
            .zip(self.coeffs.iter())
            .map(|(a, c)| c * h[0][a[0]] * h[1][a[1]] * h[2][a[2]])
            .sum();
        poly * reference_maxwellian(xi)
    }
}

/// Orthogonal projection onto a smaller index set (coefficient truncation).
pub fn project(
    f: &SpectralVector,
    source: &HermiteIndexSet,
    target: &HermiteIndexSet,
) -> Result<SpectralVector, HermiteError> {
    if f.degree != source.degree || f.coeffs.len() != source.dim() || target.degree > source.degree
    {
        return Err(HermiteError::IncompatibleSets {
            source_degree: f.degree,
            target_degree: target.degree,
        });
    }
    let coeffs = DVector::from_iterator(
        target.dim(),
        target.indices.iter().map(|a| {
            let i = source.position(a).expect("target is a subset of source");
            f.coeffs[i]
        }),
    );
    Ok(SpectralVector {
        degree: target.degree,
        coeffs,
    })
}

/// Zero-padding embedding of a vector into a larger index set.
pub fn embed(f: &SpectralVector, source: &HermiteIndexSet, target: &HermiteIndexSet) -> Result<SpectralVector, HermiteError> {
    if f.coeffs.len() != source.dim() || target.degree < source.degree {
        return Err(HermiteError::IncompatibleSets {
            source_degree: source.degree,
            target_degree: target.degree,
        });
    }
    let mut out = SpectralVector::zeros(target);
    for (i, a) in source.indices.iter().enumerate() {
        out.coeffs[target.position(a).expect("superset")] = f.coeffs[i];
    }
    Ok(out)
}

/// Harmonic-oscillator norm `|L_osc^ell f|`, diagonal with eigenvalues `|a| + 3/2`.
pub fn oscillator_norm(f: &SpectralVector, set: &HermiteIndexSet, ell: f64) -> f64 {
    set.indices
        .iter()
        .zip(f.coeffs.iter())
        .map(|(a, c)| {
            let w = (HermiteIndexSet::order(a) as f64 + 1.5).powf(ell);
            (w * c).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Coordinates of the orthogonal projection onto the span of
/// `{M, xi_1 M, (|xi|^2 - 3) M / sqrt(6)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub a: [f64; 3],
}

impl MacroState {
    pub const REFERENCE: MacroState = MacroState { a: [1.0, 0.0, 0.0] };

    pub fn new(a0: f64, a1: f64, a2: f64) -> Self {
        MacroState { a: [a0, a1, a2] }
    }

    pub fn from_conserved(w: ConservedState) -> Self {
        MacroState {
            a: [w.rho, w.m, (2.0 * w.e - 3.0 * w.rho) / 6f64.sqrt()],
        }
    }

    pub fn from_hydro(v: HydroState) -> Self {
        Self::from_conserved(crate::fluid::to_conserved(v))
    }

    pub fn to_conserved(self) -> ConservedState {
        ConservedState {
            rho: self.a[0],
            m: self.a[1],
            e: 0.5 * (3.0 * self.a[0] + 6f64.sqrt() * self.a[2]),
        }
    }

    pub fn to_vector(self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.a[0], self.a[1], self.a[2])
    }

    pub fn from_vector(v: &nalgebra::Vector3<f64>) -> Self {
        MacroState { a: [v[0], v[1], v[2]] }
    }
}

/// Matrix of the linear map macro coordinates `(a0,a1,a2)` to conserved moments `(rho,m,E)`.
pub fn macro_to_conserved_matrix() -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.5, 0.0, 0.5 * 6f64.sqrt())
}

/// Macro coordinates of a coefficient vector.
pub fn macro_coords(coeffs: &DVector<f64>, set: &HermiteIndexSet) -> MacroState {
    let mp = set.macro_positions();
    let a2 = (coeffs[mp.diag[0]] + coeffs[mp.diag[1]] + coeffs[mp.diag[2]]) / 3f64.sqrt();
    MacroState {
        a: [coeffs[mp.mass], coeffs[mp.momentum], a2],
    }
}

/// Coefficient vector of the macroscopic element with coordinates `m`.
pub fn lift_macro(m: MacroState, set: &HermiteIndexSet) -> SpectralVector {
    let mp = set.macro_positions();
    let mut v = SpectralVector::zeros(set);
    v.coeffs[mp.mass] = m.a[0];
    v.coeffs[mp.momentum] = m.a[1];
    let w = m.a[2] / 3f64.sqrt();
    for &d in &mp.diag {
        v.coeffs[d] += w;
    }
    v
}

/// Splits `f` into its macroscopic coordinates and microscopic remainder.
pub fn macro_split(
    f: &SpectralVector,
    set: &HermiteIndexSet,
) -> Result<(MacroState, SpectralVector), HermiteError> {
    if set.degree < 2 {
        return Err(HermiteError::DegreeTooSmall(set.degree));
    }
    if f.coeffs.len() != set.dim() {
        return Err(HermiteError::DimensionMismatch {
            expected: set.dim(),
            got: f.coeffs.len(),
        });
    }
    let m = macro_coords(&f.coeffs, set);
    let lifted = lift_macro(m, set);
    Ok((
        m,
        SpectralVector {
            degree: set.degree,
            coeffs: &f.coeffs - lifted.coeffs,
        },
    ))
}

/// Order of the Gauss-Hermite rule used for moment and orthonormality checks.
pub fn default_quadrature_order(degree: usize) -> usize {
    2 * degree + 4
}

/// Tensor Gauss-Hermite nodes for the standard normal weight in 3D:
/// `int g(xi) M(xi) dxi ~ sum w g(x)`.
pub fn tensor_normal_rule(order: usize) -> Vec<([f64; 3], f64)> {
    let r = gauss_hermite_normal(order);
    let mut out = Vec::with_capacity(order.pow(3));
    for i in 0..order {
        for j in 0..order {
            for k in 0..order {
                out.push((
                    [r.nodes[i], r.nodes[j], r.nodes[k]],
                    r.weights[i] * r.weights[j] * r.weights[k],
                ));
            }
        }
    }
    out
}

/// Gram matrix `G_ab = int w(xi) h_a h_b M dxi` for a radial weight `w`.
pub fn weighted_gram<W: Fn(f64) -> f64>(set: &HermiteIndexSet, order: usize, weight: W) -> DMatrix<f64> {
    let n = set.dim();
    let deg = set.degree + 1;
    let mut g = DMatrix::zeros(n, n);
    let mut h = [vec![0.0; deg], vec![0.0; deg], vec![0.0; deg]];
    let mut vals = vec![0.0; n];
    for (xi, w) in tensor_normal_rule(order) {
        for d in 0..3 {
            hermite_values(xi[d], &mut h[d]);
        }
        for (v, a) in vals.iter_mut().zip(&set.indices) {
            *v = h[0][a[0]] * h[1][a[1]] * h[2][a[2]];
        }
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let ww = w * weight(r2);
        for a in 0..n {
            let va = ww * vals[a];
            for b in a..n {
                g[(a, b)] += va * vals[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    g
}

/// Quadrature order used for the weighted proxy norm.
pub fn proxy_quadrature_order(degree: usize) -> usize {
    (2 * degree + 4).max(40)
}

/// Precomputed quadratic form of the weighted proxy norm
/// `|<xi>^{gamma/2+s} f / sqrt(M)|_{L^2}`.
#[derive(Clone, Debug)]
pub struct ProxyNorm {
    pub gram: DMatrix<f64>,
}

impl ProxyNorm {
    pub fn new(set: &HermiteIndexSet, gamma: f64, s: f64) -> Self {
        let p = 0.5 * (gamma + 2.0 * s);
        let gram = if p == 0.0 {
            DMatrix::identity(set.dim(), set.dim())
        } else {
            weighted_gram(set, proxy_quadrature_order(set.degree), |r2| (1.0 + r2).powf(p))
        };
        ProxyNorm { gram }
    }

    /// Proxy of the lifted dissipation norm: the `(gamma, s)` weight plus
    /// `kappa` times the weight of the lift kernel, `<xi>^{1}`.
    pub fn kappa_weighted(set: &HermiteIndexSet, gamma: f64, s: f64, kappa: f64) -> Self {
        let base = Self::new(set, gamma, s).gram;
        if kappa == 0.0 {
            return ProxyNorm { gram: base };
        }
        let lift = weighted_gram(set, proxy_quadrature_order(set.degree), |r2| 1.0 + r2);
        ProxyNorm {
            gram: base + lift * kappa,
        }
    }

    pub fn norm_sq(&self, c: &DVector<f64>) -> f64 {
        (c.transpose() * &self.gram * c)[(0, 0)].max(0.0)
    }

    pub fn norm(&self, c: &DVector<f64>) -> f64 {
        self.norm_sq(c).sqrt()
    }
}

/// Weighted proxy for the dissipation norm; see [`ProxyNorm`].
pub fn hh1_proxy_norm(f: &SpectralVector, set: &HermiteIndexSet, gamma: f64, s: f64) -> f64 {
    ProxyNorm::new(set, gamma, s).norm(&f.coeffs)
}

/// Normalized Hermite expectations `E[h_n(X)]` for `X ~ N(mu, sigma2)`, `n <= nmax`.
pub fn gaussian_hermite_moments(mu: f64, sigma2: f64, nmax: usize) -> Vec<f64> {
    let d = sigma2 - 1.0;
    let mut out = vec![0.0; nmax + 1];
    let mut fact = vec![1.0f64; nmax + 1];
    for k in 1..=nmax {
        fact[k] = fact[k - 1] * k as f64;
    }
    for n in 0..=nmax {
        let mut sum = 0.0;
        for k in 0..=n / 2 {
            sum += fact[n] / (fact[k] * fact[n - 2 * k] * 2f64.powi(k as i32))
                * d.powi(k as i32)
                * mu.powi((n - 2 * k) as i32);
        }
        out[n] = sum / fact[n].sqrt();
    }
    out
}

/// Exact coefficients of `Pi_N M_V` for the Maxwellian
/// `rho (2 pi T)^{-3/2} exp(-|xi - u e_1|^2 / (2T))`.
pub fn maxwellian_coefficients(v: HydroState, set: &HermiteIndexSet) -> SpectralVector {
    let m1 = gaussian_hermite_moments(v.u, v.t, set.degree);
    let m0 = gaussian_hermite_moments(0.0, v.t, set.degree);
    let coeffs = DVector::from_iterator(
        set.dim(),
        set.indices
            .iter()
            .map(|a| v.rho * m1[a[0]] * m0[a[1]] * m0[a[2]]),
    );
    SpectralVector {
        degree: set.degree,
        coeffs,
    }
}

/// Matrix of `f -> Pi_N (xi_1 f)` in the `psi` basis; symmetric.
pub fn xi1_matrix(set: &HermiteIndexSet) -> DMatrix<f64> {
    let n = set.dim();
    let mut a = DMatrix::zeros(n, n);
    for (j, alpha) in set.indices.iter().enumerate() {
        let up = [alpha[0] + 1, alpha[1], alpha[2]];
        if let Some(i) = set.position(&up) {
            a[(i, j)] = ((alpha[0] + 1) as f64).sqrt();
        }
        if alpha[0] > 0 {
            let down = [alpha[0] - 1, alpha[1], alpha[2]];
            if let Some(i) = set.position(&down) {
                a[(i, j)] = (alpha[0] as f64).sqrt();
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_set_dims() {
        let dims: Vec<usize> = (2..=6).map(|n| build_index_set(n).unwrap().dim()).collect();
        assert_eq!(dims, vec![5, 8, 14, 20, 30]);
        let s2 = build_index_set(2).unwrap();
        assert_eq!(
            s2.indices,
            vec![[0, 0, 0], [1, 0, 0], [0, 0, 2], [0, 2, 0], [2, 0, 0]]
        );
        assert!(build_index_set(1).is_err());
    }

    #[test]
    fn maxwellian_macro_coordinates() {
        let set = build_index_set(4).unwrap();
        let v = HydroState {
            rho: 1.3,
            u: 0.2,
            t: 0.9,
        };
        let c = maxwellian_coefficients(v, &set);
        let m = macro_coords(&c.coeffs, &set);
        let w = crate::fluid::to_conserved(v);
        let back = m.to_conserved();
        assert!((back.rho - w.rho).abs() < 1e-14);
        assert!((back.m - w.m).abs() < 1e-14);
        assert!((back.e - w.e).abs() < 1e-14);
    }

    #[test]
    fn micro_basis_is_orthonormal_complement() {
        let set = build_index_set(4).unwrap();
        let v = set.micro_basis();
        let e = set.macro_basis();
        let gram = v.transpose() * &v;
        assert!((gram - DMatrix::identity(set.dim() - 3, set.dim() - 3)).norm() < 1e-14);
        assert!((e.transpose() * &v).norm() < 1e-14);
    }
}
