//! Fourth-order two-point Hermite collocation for `F' = M(x) F - G(x)` with
//! projected boundary conditions and a scalar phase condition.
//!
//! Each interval carries the relation
//! `F1 - F0 = h/2 (F0' + F1') - h^2/12 (F1'' - F0'')`, whose stability
//! function is the (2,2) Pade approximant of the exponential: decaying modes
//! stay decaying and growing modes stay growing for every step size.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{endpoint_analysis, BvpError, EndpointAnalysis, FirstOrderSystem};
use crate::linalg::{row_space, BandMatrix};
use crate::stencil::{derivative_vectors, uniform_spacing};

#[derive(Clone, Debug, Serialize)]
pub struct BvpSolution {
    #[serde(skip)]
    pub states: Vec<DVector<f64>>,
    /// Value of the phase functional at the center node.
    pub phase_value: f64,
    /// Normwise backward error of the discrete linear system.
    pub linear_residual: f64,
    /// Largest to smallest pivot ratio of the banded factorization.
    pub pivot_ratio: f64,
    pub center_index: usize,
    pub dim_unstable_minus: usize,
    pub dim_stable_plus: usize,
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

struct Triplets {
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl Triplets {
    fn push_row(&mut self, cols: &[(usize, f64)], rhs: f64) {
        let r = self.rhs.len();
        for &(c, v) in cols {
            if v != 0.0 {
                self.entries.push((r, c, v));
            }
        }
        self.rhs.push(rhs);
    }

    /// Appends the rows of `block * F_node`, scaled by `scale`.
    fn push_block(&mut self, block: &DMatrix<f64>, node: usize, n: usize, rhs: &DVector<f64>, scale: f64) {
        for i in 0..block.nrows() {
            let cols: Vec<(usize, f64)> = (0..n).map(|j| (node * n + j, block[(i, j)] * scale)).collect();
            self.push_row(&cols, rhs[i] * scale);
        }
    }
}

/// Solves the boundary-value problem on the system's grid. The left state is
/// required to lie in the unstable subspace of `M(-inf)` and the right state
/// in the stable subspace of `M(+inf)` (each shifted by the constant-forcing
/// equilibrium), and `ell . F[..macro_dim](0) = d`.
pub fn solve_bvp(system: &FirstOrderSystem, ell: &DVector<f64>, d: f64) -> Result<BvpSolution, BvpError> {
    let analysis = endpoint_analysis(system)?;
    solve_with_analysis(system, &analysis, ell, d)
}

pub fn solve_with_analysis(
    system: &FirstOrderSystem,
    analysis: &EndpointAnalysis,
    ell: &DVector<f64>,
    d: f64,
) -> Result<BvpSolution, BvpError> {
    let n = system.dim();
    let m = system.grid.len();
    if system.coeffs.len() != m || system.source.len() != m {
        return Err(BvpError::GridMismatch("coefficient or source length differs from grid".into()));
    }
    if ell.len() != system.macro_dim {
        return Err(BvpError::GridMismatch(format!(
            "phase vector has length {}, expected {}",
            ell.len(),
            system.macro_dim
        )));
    }
    let h = uniform_spacing(&system.grid)
        .ok_or_else(|| BvpError::GridMismatch("grid must be uniform with at least five nodes".into()))?;
    if analysis.dimension_sum() != n + 1 {
        return Err(BvpError::SingularBvp(format!(
            "dim U(-) + dim S(+) = {} but {} is required",
            analysis.dimension_sum(),
            n + 1
        )));
    }
    let k_left = n - analysis.dim_unstable_minus;
    let k_right = n - analysis.dim_stable_plus;

    let flat: Vec<DVector<f64>> = system.coeffs.iter().map(flatten).collect();
    let dm: Vec<DMatrix<f64>> = derivative_vectors(&flat, h)
        .into_iter()
        .map(|v| DMatrix::from_column_slice(n, n, v.as_slice()))
        .collect();
    let dg = derivative_vectors(&system.source, h);

    let mut t = Triplets {
        entries: Vec::new(),
        rhs: Vec::new(),
    };
    let shifted = |a: &DMatrix<f64>, g: &DVector<f64>| -> Result<DVector<f64>, BvpError> {
        a.clone()
            .lu()
            .solve(g)
            .ok_or_else(|| BvpError::SingularBvp("singular endpoint matrix".into()))
    };
    let left_rows = row_space(&analysis.stable_minus, k_left);
    let eq_left = shifted(&system.a_minus, &system.source[0])?;
    t.push_block(&left_rows, 0, n, &(&left_rows * eq_left), 1.0);

    let center = system.center_index();
    let id = DMatrix::<f64>::identity(n, n);
    let c2 = h * h / 12.0;
    for i in 0..m - 1 {
        if i == center {
            let cols: Vec<(usize, f64)> = (0..system.macro_dim).map(|j| (center * n + j, ell[j])).collect();
            t.push_row(&cols, d);
        }
        let (m0, m1) = (&system.coeffs[i], &system.coeffs[i + 1]);
        let (g0, g1) = (&system.source[i], &system.source[i + 1]);
        let b0 = -&id - m0 * (0.5 * h) - (&dm[i] + m0 * m0) * c2;
        let b1 = &id - m1 * (0.5 * h) + (&dm[i + 1] + m1 * m1) * c2;
        let rhs = -(g0 + g1) * (0.5 * h) + (m1 * g1 + &dg[i + 1] - m0 * g0 - &dg[i]) * c2;
        let scale = 1.0 / b0.amax().max(b1.amax());
        for r in 0..n {
            let mut cols = Vec::with_capacity(2 * n);
            for j in 0..n {
                cols.push((i * n + j, b0[(r, j)] * scale));
            }
            for j in 0..n {
                cols.push(((i + 1) * n + j, b1[(r, j)] * scale));
            }
            t.push_row(&cols, rhs[r] * scale);
        }
    }
    if center == m - 1 {
        let cols: Vec<(usize, f64)> = (0..system.macro_dim).map(|j| (center * n + j, ell[j])).collect();
        t.push_row(&cols, d);
    }
    let right_rows = row_space(&analysis.unstable_plus, k_right);
    let eq_right = shifted(&system.a_plus, &system.source[m - 1])?;
    t.push_block(&right_rows, m - 1, n, &(&right_rows * eq_right), 1.0);

    let total = n * m;
    if t.rhs.len() != total {
        return Err(BvpError::SingularBvp(format!(
            "{} equations for {} unknowns",
            t.rhs.len(),
            total
        )));
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    for &(r, c, _) in &t.entries {
        if r > c {
            kl = kl.max(r - c);
        } else {
            ku = ku.max(c - r);
        }
    }
    let mut band = BandMatrix::zeros(total, kl, ku);
    for &(r, c, v) in &t.entries {
        band.add(r, c, v);
    }
    let backup = band.clone();
    let lu = band
        .lu()
        .map_err(|e| BvpError::SingularBvp(format!("factorization failed: {e}")))?;
    let x = lu.solve(&t.rhs)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(BvpError::SingularBvp(format!(
            "non-finite solution (pivot ratio {:e})",
            lu.pivot_ratio
        )));
    }
    let ax = backup.mul_vec(&x);
    let mut backward = 0.0f64;
    for r in 0..total {
        let mut scale = t.rhs[r].abs();
        let lo = r.saturating_sub(kl);
        let hi = (r + ku).min(total - 1);
        for c in lo..=hi {
            scale += (backup.get(r, c) * x[c]).abs();
        }
        if scale > 0.0 {
            backward = backward.max((ax[r] - t.rhs[r]).abs() / scale);
        }
    }
    let states: Vec<DVector<f64>> = (0..m).map(|i| DVector::from_column_slice(&x[i * n..(i + 1) * n])).collect();
    let phase_value = (0..system.macro_dim).map(|j| ell[j] * states[center][j]).sum();
    Ok(BvpSolution {
        states,
        phase_value,
        linear_residual: backward,
        pivot_ratio: lu.pivot_ratio,
        center_index: center,
        dim_unstable_minus: analysis.dim_unstable_minus,
        dim_stable_plus: analysis.dim_stable_plus,
    })
}

/// `max |F'(x_i) - M_i F_i + G_i| / (|M_i F_i| + |G_i| + tiny)` with `F'` from
/// fourth-order stencils; small where the solution is resolved by the grid.
pub fn ode_defect(system: &FirstOrderSystem, states: &[DVector<f64>]) -> f64 {
    let h = match uniform_spacing(&system.grid) {
        Some(h) => h,
        None => return f64::NAN,
    };
    let d = derivative_vectors(states, h);
    let mut worst = 0.0f64;
    for i in 0..states.len() {
        let rhs = &system.coeffs[i] * &states[i] - &system.source[i];
        let scale = (&system.coeffs[i] * &states[i]).amax() + system.source[i].amax() + 1e-300;
        worst = worst.max((&d[i] - rhs).amax() / scale);
    }
    worst
}
