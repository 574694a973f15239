//! Exponential integrals of interpolated data and complex eigendecompositions,
//! used by the conjugation and dichotomy constructions.

use nalgebra::{Complex, DMatrix, DVector};

use super::BvpError;

pub type C64 = Complex<f64>;

/// Number of nodes of the local interpolant used by the convolutions.
pub const INTERP_POINTS: usize = 6;

/// `phi_0(z), ..., phi_kmax(z)`, where `phi_0 = exp` and
/// `phi_{k+1}(z) = (phi_k(z) - 1/k!) / z`.
pub fn phi_all(kmax: usize, z: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(kmax + 1);
    if z.norm() < 2.0 {
        let mut fact = 1.0;
        for k in 0..=kmax {
            if k > 0 {
                fact *= k as f64;
            }
            let mut term = C64::new(1.0 / fact, 0.0);
            let mut sum = term;
            for j in 1..80 {
                term = term * z / (j + k) as f64;
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            out.push(sum);
        }
        return out;
    }
    let mut p = z.exp();
    out.push(p);
    let mut fact = 1.0;
    for k in 0..kmax {
        if k > 0 {
            fact *= k as f64;
        }
        p = (p - 1.0 / fact) / z;
        out.push(p);
    }
    out
}

pub fn phi(k: usize, z: C64) -> C64 {
    phi_all(k, z)[k]
}

/// Monomial coefficients of the Lagrange basis polynomials on nodes `o`.
fn lagrange_coefficients(o: &[f64]) -> Vec<Vec<f64>> {
    let n = o.len();
    (0..n)
        .map(|i| {
            let mut c = vec![0.0; n];
            c[0] = 1.0;
            let mut deg = 0;
            let mut den = 1.0;
            for (j, &oj) in o.iter().enumerate() {
                if j == i {
                    continue;
                }
                den *= o[i] - oj;
                deg += 1;
                for d in (1..=deg).rev() {
                    c[d] = c[d - 1] - oj * c[d];
                }
                c[0] *= -oj;
            }
            c.iter().map(|v| v / den).collect()
        })
        .collect()
}

/// Weights `w` with `int_0^h exp(z (1 - t/h)) p(t) dt = sum_k w_k g_k`, where
/// `p` interpolates `(o_k h, g_k)`.
pub fn exp_weights(z: C64, h: f64, o: &[f64]) -> Vec<C64> {
    let n = o.len();
    let ph = phi_all(n, z);
    let mut moments = Vec::with_capacity(n);
    let mut fact = 1.0;
    for j in 0..n {
        if j > 0 {
            fact *= j as f64;
        }
        moments.push(ph[j + 1] * fact);
    }
    lagrange_coefficients(o)
        .iter()
        .map(|c| c.iter().zip(&moments).map(|(ci, m)| *m * *ci).sum::<C64>() * h)
        .collect()
}

/// `K_k = int_{x_0}^{x_k} exp(a (x_k - y)) g(y) dy` on a uniform grid with
/// local degree-5 interpolation of `g`. Intended for `Re a <= 0` or small.
pub fn convolve_forward(a: C64, g: &[C64], h: f64) -> Vec<C64> {
    let m = g.len();
    let mut out = vec![C64::new(0.0, 0.0); m];
    if m < 2 {
        return out;
    }
    let z = a * h;
    let decay = z.exp();
    let width = INTERP_POINTS.min(m);
    let table: Vec<Vec<C64>> = (0..width - 1)
        .map(|lead| {
            let o: Vec<f64> = (0..width).map(|j| j as f64 - lead as f64).collect();
            exp_weights(z, h, &o)
        })
        .collect();
    for k in 0..m - 1 {
        let start = (k + 1).saturating_sub(width / 2).min(m - width);
        let w = &table[k - start];
        let inc: C64 = w.iter().enumerate().map(|(j, wj)| *wj * g[start + j]).sum();
        out[k + 1] = decay * out[k] + inc;
    }
    out
}

/// `K_k = int_{x_k}^{x_end} exp(a (y - x_k)) g(y) dy`.
pub fn convolve_backward(a: C64, g: &[C64], h: f64) -> Vec<C64> {
    let rev: Vec<C64> = g.iter().rev().cloned().collect();
    let mut out = convolve_forward(a, &rev, h);
    out.reverse();
    out
}

/// Diagonalization `A = V diag(values) V^{-1}` of a real matrix with simple spectrum.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vecs: DMatrix<C64>,
    pub inv: DMatrix<C64>,
}

pub fn complexify(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

pub fn eigen(a: &DMatrix<f64>) -> Result<Eigen, BvpError> {
    let n = a.nrows();
    let values: Vec<C64> = a.complex_eigenvalues().iter().cloned().collect();
    let ac = complexify(a);
    let scale = a.amax().max(1.0);
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (j, &lam) in values.iter().enumerate() {
        let shift = lam + C64::new(1e-10 * scale, 1e-10 * scale);
        let b = &ac - DMatrix::<C64>::identity(n, n) * shift;
        let lu = b.lu();
        let mut v = DVector::<C64>::from_fn(n, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.37 - 0.05 * i as f64));
        for _ in 0..3 {
            v = lu
                .solve(&v)
                .ok_or_else(|| BvpError::Numerical("inverse iteration breakdown".into()))?;
            let nv = v.norm();
            v /= C64::new(nv, 0.0);
        }
        let res = (&ac * &v - &v * lam).norm();
        if !(res <= 1e-8 * scale) {
            return Err(BvpError::Numerical(format!(
                "eigenvector residual {res:e} for eigenvalue {lam}"
            )));
        }
        vecs.set_column(j, &v);
    }
    let inv = vecs
        .clone()
        .try_inverse()
        .ok_or_else(|| BvpError::Numerical("defective eigenbasis".into()))?;
    let recon = &vecs * DMatrix::from_diagonal(&DVector::from_vec(values.clone())) * &inv - &ac;
    let err = recon.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if err > 1e-8 * scale {
        return Err(BvpError::Numerical(format!("ill-conditioned eigenbasis (reconstruction {err:e})")));
    }
    Ok(Eigen { values, vecs, inv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_branches_agree_across_the_switch() {
        for &z in &[C64::new(1.99, 0.0), C64::new(-1.4, 1.42), C64::new(0.3, -1.97)] {
            let inside = phi_all(7, z);
            let outside = phi_all(7, z * 1.0101);
            for k in 0..=7 {
                assert!((inside[k] - outside[k]).norm() < 0.05 * inside[k].norm());
            }
        }
        let z = C64::new(0.6, 0.0);
        let direct = (z.exp() - 1.0 - z) / (z * z);
        assert!((phi(2, z) - direct).norm() < 1e-14);
        let z = C64::new(-5.0, 0.0);
        let direct = (z.exp() - 1.0 - z - z * z / 2.0) / (z * z * z);
        assert!((phi(3, z) - direct).norm() < 1e-14);
    }

    #[test]
    fn forward_convolution_of_polynomial() {
        let h = 0.05;
        let xs: Vec<f64> = (0..81).map(|i| i as f64 * h).collect();
        let a = C64::new(-3.0, 0.0);
        let g: Vec<C64> = xs.iter().map(|x| C64::new(x * x, 0.0)).collect();
        let k = convolve_forward(a, &g, h);
        for (x, kv) in xs.iter().zip(&k) {
            let exact = x * x / 3.0 - 2.0 * x / 9.0 + 2.0 / 27.0 * (1.0 - (-3.0 * x).exp());
            assert!((kv.re - exact).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn backward_convolution_is_sixth_order() {
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&h| {
                let m = (4.0 / h) as usize + 1;
                let xs: Vec<f64> = (0..m).map(|i| i as f64 * h).collect();
                let g: Vec<C64> = xs.iter().map(|x| C64::new(x.sin(), 0.0)).collect();
                let k = convolve_backward(C64::new(-2.0, 0.0), &g, h);
                let end = 4.0f64;
                let exact = |x: f64| {
                    let prim = |y: f64| (-2.0 * (y - x)).exp() * (-2.0 * y.sin() - y.cos()) / 5.0;
                    prim(end) - prim(x)
                };
                xs.iter().zip(&k).map(|(x, kv)| (kv.re - exact(*x)).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 1e-9, "{errs:?}");
        assert!(errs[0] / errs[1] > 40.0, "{errs:?}");
    }
}
