//! Energy identity diagnostic for a computed linear solution.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{BvpError, FirstOrderSystem};
use crate::stencil::{derivative_vectors, trapezoid, uniform_spacing};

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    /// `int <z', f'> + lambda int <z, f> + int <K z, f'>`.
    pub energy_functional: f64,
    /// `|f'|^2 + |v|^2` in the weighted dissipation norm, `L^2_eps` in `x`.
    pub lhs: f64,
    /// `|z|^2_{-1} + |z'|^2_{-1} + eps^2 |u|^2`, `L^2_eps` in `x`.
    pub rhs: f64,
    /// `lhs / rhs`.
    pub constant: f64,
}

/// Measures the ratio of the dissipation of `f` to the size of the source.
/// `z` holds the per-node coefficient source, `gram` the quadratic form of
/// the dissipation norm and `k` the compensator.
pub fn energy_diagnostic(
    system: &FirstOrderSystem,
    states: &[DVector<f64>],
    z: &[DVector<f64>],
    k: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    lambda: f64,
    epsilon: f64,
) -> Result<EnergyReport, BvpError> {
    let kin = system
        .kinetic
        .as_ref()
        .ok_or_else(|| BvpError::Numerical("energy diagnostic needs a kinetic system".into()))?;
    let m = system.grid.len();
    if states.len() != m || z.len() != m {
        return Err(BvpError::GridMismatch(format!(
            "{} states and {} sources for {m} nodes",
            states.len(),
            z.len()
        )));
    }
    let h = uniform_spacing(&system.grid)
        .ok_or_else(|| BvpError::GridMismatch("grid must be uniform".into()))?;
    let gram_inv = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| BvpError::Numerical("singular Gram matrix".into()))?;
    let dz = derivative_vectors(z, h);
    let q = |a: &DVector<f64>, mat: &DMatrix<f64>| (a.transpose() * mat * a)[(0, 0)];

    let mut e_density = Vec::with_capacity(m);
    let mut lhs_density = Vec::with_capacity(m);
    let mut rhs_density = Vec::with_capacity(m);
    for i in 0..m {
        let (f, df) = kin.basis.extract(&states[i], &kin.blocks[i], system.eta);
        let (u, v) = kin.basis.split(&f);
        let micro = &kin.basis.v * v;
        e_density.push(dz[i].dot(&df) + lambda * z[i].dot(&f) + (k * &z[i]).dot(&df));
        lhs_density.push(q(&df, gram) + q(&micro, gram));
        rhs_density.push(q(&z[i], &gram_inv) + q(&dz[i], &gram_inv) + epsilon * epsilon * u.norm_squared());
    }
    let lhs = epsilon * trapezoid(&system.grid, &lhs_density);
    let rhs = epsilon * trapezoid(&system.grid, &rhs_density);
    if !(rhs > 0.0) {
        return Err(BvpError::Numerical("source and solution vanish".into()));
    }
    Ok(EnergyReport {
        energy_functional: trapezoid(&system.grid, &e_density),
        lhs,
        rhs,
        constant: lhs / rhs,
    })
}
