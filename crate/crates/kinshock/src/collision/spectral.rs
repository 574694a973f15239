use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::hermite::HermiteIndexSet;

use super::CollisionError;

/// Spectral summary of a linearized collision matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Number of singular values below `1e-7` times the largest one.
    pub kernel_dim: usize,
    /// Smallest singular values, ascending.
    pub smallest_singular_values: Vec<f64>,
    /// Largest principal angle between the three-dimensional numerical kernel
    /// and the macroscopic span.
    pub kernel_angle: f64,
    /// `-max eig` of the symmetric part restricted to the microscopic subspace.
    pub delta0: f64,
    /// Same bound measured against the weighted proxy norm, when a Gram matrix is supplied.
    pub delta0_proxy: Option<f64>,
    pub micro_eigenvalues: Vec<f64>,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn spectral_gap(
    l: &DMatrix<f64>,
    set: &HermiteIndexSet,
    proxy_gram: Option<&DMatrix<f64>>,
) -> Result<GapReport, CollisionError> {
    let n = set.dim();
    if l.nrows() != n || l.ncols() != n {
        return Err(CollisionError::DimensionMismatch {
            expected: n,
            got: l.nrows(),
        });
    }
    if l.iter().any(|x| !x.is_finite()) {
        return Err(CollisionError::EigSolverFailure("non-finite matrix entries".into()));
    }
    let svd = l.clone().svd(false, true);
    let vt = svd
        .v_t
        .as_ref()
        .ok_or_else(|| CollisionError::EigSolverFailure("SVD without right vectors".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let smax = svd.singular_values.max();
    let kernel_dim = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= 1e-7 * smax.max(1e-300))
        .count();
    let mut kernel = DMatrix::zeros(n, 3);
    for (c, &i) in order.iter().take(3).enumerate() {
        kernel.set_column(c, &vt.row(i).transpose());
    }
    let e = set.macro_basis();
    let resid = &kernel - &e * (e.transpose() * &kernel);
    let kernel_angle = resid.svd(false, false).singular_values.max().clamp(0.0, 1.0).asin();

    let v = set.micro_basis();
    let s = v.transpose() * sym(l) * &v;
    let eig = SymmetricEigen::new(s.clone());
    let mut micro: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    micro.sort_by(|a, b| a.total_cmp(b));
    let delta0 = -micro.last().copied().unwrap_or(0.0);

    let delta0_proxy = match proxy_gram {
        Some(g) => {
            let gm = v.transpose() * g * &v;
            let chol = gm
                .cholesky()
                .ok_or_else(|| CollisionError::EigSolverFailure("proxy Gram matrix not positive".into()))?;
            let linv = chol
                .l()
                .try_inverse()
                .ok_or_else(|| CollisionError::EigSolverFailure("singular proxy factor".into()))?;
            let w = &linv * (-s) * linv.transpose();
            let ev = SymmetricEigen::new(sym(&w)).eigenvalues;
            Some(ev.min())
        }
        None => None,
    };

    Ok(GapReport {
        kernel_dim,
        smallest_singular_values: order.iter().take(5.min(n)).map(|&i| svd.singular_values[i]).collect(),
        kernel_angle,
        delta0,
        delta0_proxy,
        micro_eigenvalues: micro,
    })
}
