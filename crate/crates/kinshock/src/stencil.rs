//! Finite-difference derivatives on uniform grids.

use nalgebra::{DMatrix, DVector};

/// Spacing of a uniform grid, or `None` if the nodes are not equally spaced
/// to relative tolerance `1e-9`, or fewer than five nodes are given.
pub fn uniform_spacing(grid: &[f64]) -> Option<f64> {
    if grid.len() < 5 {
        return None;
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let ok = grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    (ok && h > 0.0).then_some(h)
}

/// First-derivative weights at offset `at` for unit-spaced nodes `0..width`.
fn weights(width: usize, at: usize) -> Vec<f64> {
    let v = DMatrix::from_fn(width, width, |j, k| (k as f64 - at as f64).powi(j as i32));
    let mut rhs = DVector::zeros(width);
    rhs[1] = 1.0;
    let w = v.lu().solve(&rhs).expect("Vandermonde matrix is invertible");
    w.iter().copied().collect()
}

/// Derivative of nodal vectors with `width`-point stencils (odd `width`,
/// order `width - 1`), central in the interior and one-sided near the ends.
pub fn derivative_vectors_width(values: &[DVector<f64>], h: f64, width: usize) -> Vec<DVector<f64>> {
    let n = values.len();
    assert!(width >= 3 && width % 2 == 1, "stencil width must be odd");
    assert!(n >= width, "need at least {width} nodes");
    let half = width / 2;
    let table: Vec<Vec<f64>> = (0..width).map(|at| weights(width, at)).collect();
    (0..n)
        .map(|i| {
            let (start, at) = if i < half {
                (0, i)
            } else if i + half >= n {
                (n - width, i + width - n)
            } else {
                (i - half, half)
            };
            let mut acc = DVector::zeros(values[i].len());
            for (k, &wk) in table[at].iter().enumerate() {
                if wk != 0.0 {
                    acc.axpy(wk / h, &values[start + k], 1.0);
                }
            }
            acc
        })
        .collect()
}

/// Fourth-order derivative of nodal vectors, including the ends.
pub fn derivative_vectors(values: &[DVector<f64>], h: f64) -> Vec<DVector<f64>> {
    derivative_vectors_width(values, h, 5)
}

pub fn derivative_scalars(values: &[f64], h: f64) -> Vec<f64> {
    let vs: Vec<DVector<f64>> = values.iter().map(|&v| DVector::from_element(1, v)).collect();
    derivative_vectors(&vs, h).into_iter().map(|v| v[0]).collect()
}

/// Trapezoid rule on a grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_on_quartics() {
        let grid: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let h = uniform_spacing(&grid).unwrap();
        let f: Vec<f64> = grid.iter().map(|x| x.powi(4) - 2.0 * x.powi(3) + x).collect();
        let d = derivative_scalars(&f, h);
        for (x, dx) in grid.iter().zip(&d) {
            let exact = 4.0 * x.powi(3) - 6.0 * x * x + 1.0;
            assert!((dx - exact).abs() < 1e-12, "{x}: {dx} vs {exact}");
        }
    }

    #[test]
    fn wide_stencil_is_exact_on_sextics() {
        let grid: Vec<f64> = (0..15).map(|i| -1.0 + 0.15 * i as f64).collect();
        let h = uniform_spacing(&grid).unwrap();
        let f: Vec<DVector<f64>> = grid.iter().map(|x| DVector::from_element(1, x.powi(6) - x.powi(5))).collect();
        let d = derivative_vectors_width(&f, h, 7);
        for (x, dx) in grid.iter().zip(&d) {
            let exact = 6.0 * x.powi(5) - 5.0 * x.powi(4);
            assert!((dx[0] - exact).abs() < 1e-10, "{x}: {} vs {exact}", dx[0]);
        }
    }

    #[test]
    fn rejects_nonuniform() {
        assert!(uniform_spacing(&[0.0, 1.0, 2.0, 3.5, 4.0]).is_none());
        assert!(uniform_spacing(&[0.0, 1.0, 2.0]).is_none());
    }
}
