//! Kawashima compensator on the degree-3 Hermite block and its coercivity.

use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;
use thiserror::Error;

use crate::hermite::{xi1_matrix, HermiteIndexSet};

#[derive(Debug, Error)]
pub enum KawashimaError {
    #[error("compensator needs Hermite degree at least 3, got {0}")]
    DegreeTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigenvalue computation failed: {0}")]
    EigSolverFailure(String),
    #[error("no dyadic scaling down to {0:e} passes the coercivity check")]
    NoCoerciveScaling(f64),
}

/// Skew-symmetric rotation `K00` acting on the macro coordinates.
pub fn k00() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// `Pi_3 xi_1 Pi_3` embedded in the full index set: entries touching an index
/// of order above 3 are zeroed.
pub fn transport_matrix(set: &HermiteIndexSet) -> Result<DMatrix<f64>, KawashimaError> {
    if set.degree < 3 {
        return Err(KawashimaError::DegreeTooSmall(set.degree));
    }
    let mut a = xi1_matrix(set);
    let low: Vec<bool> = set
        .indices
        .iter()
        .map(|al| HermiteIndexSet::order(al) <= 3)
        .collect();
    let n = set.dim();
    for i in 0..n {
        for j in 0..n {
            if !(low[i] && low[j]) {
                a[(i, j)] = 0.0;
            }
        }
    }
    Ok(a)
}

/// Macro/micro blocks of a matrix with respect to the orthonormal bases `E`
/// (macro, `dim x 3`) and `V` (micro).
#[derive(Clone, Debug)]
pub struct MacroMicroBlocks {
    pub mm: DMatrix<f64>,
    pub mu: DMatrix<f64>,
    pub um: DMatrix<f64>,
    pub uu: DMatrix<f64>,
}

pub fn macro_micro_blocks(m: &DMatrix<f64>, set: &HermiteIndexSet) -> MacroMicroBlocks {
    let e = set.macro_basis();
    let v = set.micro_basis();
    MacroMicroBlocks {
        mm: e.transpose() * m * &e,
        mu: e.transpose() * m * &v,
        um: v.transpose() * m * &e,
        uu: v.transpose() * m * &v,
    }
}

#[derive(Clone, Debug)]
pub struct Compensator {
    /// `K = delta1 * Kbar` in the coefficient basis of the full index set.
    pub k: DMatrix<f64>,
    pub kbar: DMatrix<f64>,
    pub delta: f64,
    pub delta1: f64,
}

impl Compensator {
    pub fn with_delta1(&self, delta1: f64) -> Compensator {
        Compensator {
            k: &self.kbar * delta1,
            kbar: self.kbar.clone(),
            delta: self.delta,
            delta1,
        }
    }
}

/// `delta [K00, A00] + 2 A01 A10`, the macro block of `[Kbar, A]`.
pub fn macro_commutator_block(a: &DMatrix<f64>, set: &HermiteIndexSet, delta: f64) -> Matrix3<f64> {
    let b = macro_micro_blocks(a, set);
    let a00 = Matrix3::from_fn(|i, j| b.mm[(i, j)]);
    let prod = &b.mu * &b.um;
    let k = k00();
    (k * a00 - a00 * k) * delta + Matrix3::from_fn(|i, j| 2.0 * prod[(i, j)])
}

fn min_sym_eig(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().min()
}

/// Largest dyadic `delta <= 1` whose macro block has minimum eigenvalue at
/// least `delta` (half the small-`delta` slope `<[K00, A00] psi0, psi0> = 2`).
pub fn select_delta(a: &DMatrix<f64>, set: &HermiteIndexSet) -> f64 {
    let mut delta = 1.0;
    for _ in 0..40 {
        let m = macro_commutator_block(a, set, delta);
        let lmin = m.symmetric_eigenvalues().min();
        if lmin >= delta {
            return delta;
        }
        delta *= 0.5;
    }
    delta
}

/// `Kbar = [[delta K00, A_mu], [-A_um, 0]]` written in the coefficient basis.
/// `delta1` scales the result; `None` selects `delta` automatically.
pub fn build_compensator(
    a: &DMatrix<f64>,
    set: &HermiteIndexSet,
    delta: Option<f64>,
    delta1: f64,
) -> Result<Compensator, KawashimaError> {
    if a.nrows() != set.dim() || a.ncols() != set.dim() {
        return Err(KawashimaError::DimensionMismatch {
            expected: set.dim(),
            got: a.nrows(),
        });
    }
    let delta = delta.unwrap_or_else(|| select_delta(a, set));
    let e = set.macro_basis();
    let pm = &e * e.transpose();
    let pu = DMatrix::identity(set.dim(), set.dim()) - &pm;
    let k = k00();
    let k_big = DMatrix::from_fn(3, 3, |i, j| k[(i, j)]);
    let off = &pm * a * &pu;
    let kbar = &e * k_big * e.transpose() * delta + &off - off.transpose();
    Ok(Compensator {
        k: &kbar * delta1,
        kbar,
        delta,
        delta1,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoercivityReport {
    /// Macro coercivity constant of `<[Kbar, xi_1] f, f>`.
    pub c1: f64,
    /// Micro loss constant of `<[Kbar, xi_1] f, f>`.
    pub c1_loss: f64,
    /// Minimum eigenvalue of the symmetric part of `K xi_1 - L`.
    pub min_combined_eig: f64,
    pub delta: f64,
    pub delta1: f64,
}

/// Best constants in `<[Kbar, A] f, f> >= c1 |P f|^2 - C1 |(I - P) f|^2`
/// together with the combined coercivity margin of `K A - L`.
pub fn coercivity_check(
    comp: &Compensator,
    a: &DMatrix<f64>,
    l: &DMatrix<f64>,
    set: &HermiteIndexSet,
) -> Result<CoercivityReport, KawashimaError> {
    let n = set.dim();
    for m in [a, l, &comp.k] {
        if m.nrows() != n || m.ncols() != n {
            return Err(KawashimaError::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
    }
    let comm = &comp.kbar * a - a * &comp.kbar;
    let b = macro_micro_blocks(&comm, set);
    let mm = (&b.mm + b.mm.transpose()) * 0.5;
    let c1 = 0.5 * mm.symmetric_eigenvalues().min();
    if !(c1 > 0.0) {
        return Err(KawashimaError::EigSolverFailure(format!(
            "macro block of the commutator is not positive (c1 = {c1})"
        )));
    }
    let shifted = &mm - DMatrix::identity(3, 3) * c1;
    let inv = shifted
        .try_inverse()
        .ok_or_else(|| KawashimaError::EigSolverFailure("singular macro block".into()))?;
    let uu = (&b.uu + b.uu.transpose()) * 0.5;
    let schur = &b.um * inv * &b.mu - uu;
    let c1_loss = min_sym_eig(&(-&schur)).min(0.0).abs();
    let combined = &comp.k * a - l;
    Ok(CoercivityReport {
        c1,
        c1_loss,
        min_combined_eig: min_sym_eig(&combined),
        delta: comp.delta,
        delta1: comp.delta1,
    })
}

/// Largest dyadic `delta1 <= 1` for which `K xi_1 - L` is coercive.
pub fn select_delta1(
    base: &Compensator,
    a: &DMatrix<f64>,
    l: &DMatrix<f64>,
    set: &HermiteIndexSet,
) -> Result<Compensator, KawashimaError> {
    let mut d1 = 1.0;
    while d1 > 1e-8 {
        let c = base.with_delta1(d1);
        if coercivity_check(&c, a, l, set)?.min_combined_eig > 0.0 {
            return Ok(c);
        }
        d1 *= 0.5;
    }
    Err(KawashimaError::NoCoerciveScaling(d1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::build_index_set;

    #[test]
    fn macro_blocks_match_closed_forms() {
        let set = build_index_set(4).unwrap();
        let a = transport_matrix(&set).unwrap();
        let b = macro_micro_blocks(&a, &set);
        let r = (2.0f64 / 3.0).sqrt();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, r, 0.0, r, 0.0]);
        assert!((&b.mm - expect).abs().max() < 1e-14);
        let prod = &b.mu * &b.um;
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 4.0 / 3.0, 5.0 / 3.0]));
        assert!((prod - diag).abs().max() < 1e-13);
    }

    #[test]
    fn delta_selection_and_skewness() {
        let set = build_index_set(3).unwrap();
        let a = transport_matrix(&set).unwrap();
        let comp = build_compensator(&a, &set, None, 1.0).unwrap();
        assert_eq!(comp.delta, 0.5);
        assert!((&comp.k + comp.k.transpose()).abs().max() < 1e-15);
    }

    #[test]
    fn degree_two_rejected() {
        let set = build_index_set(2).unwrap();
        assert!(matches!(
            transport_matrix(&set),
            Err(KawashimaError::DegreeTooSmall(2))
        ));
    }
}
