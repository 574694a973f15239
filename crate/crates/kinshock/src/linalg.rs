//! Banded LU with partial pivoting and spectral projections of hyperbolic matrices.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
    #[error("sign iteration did not converge (last correction {0:e})")]
    SignNoConvergence(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// room for the `kl` extra super-diagonals created by pivoting.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = i as isize - self.kl as isize;
        let off = j as isize - lo;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to entry `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let k = self.slot(i, j).expect("inside band");
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let k = self.slot(i, j).expect("inside band");
        self.data[k] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn lu(mut self) -> Result<BandLu, LinalgError> {
        let (n, kl) = (self.n, self.kl);
        let span = kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut mult = vec![0.0; n * kl.max(1)];
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular(k));
            }
            max_piv = max_piv.max(best);
            min_piv = min_piv.min(best);
            piv[k] = p;
            let hi = (k + span).min(n - 1);
            if p != k {
                for j in k..=hi {
                    let a = self.slot(k, j).expect("band");
                    let b = self.slot(p, j).expect("band");
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let ik = self.slot(i, k).expect("band");
                let m = self.data[ik] / pivot;
                self.data[ik] = 0.0;
                mult[k * kl + (i - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=hi {
                        let u = self.get(k, j);
                        if u != 0.0 {
                            let s = self.slot(i, j).expect("band");
                            self.data[s] -= m * u;
                        }
                    }
                }
            }
        }
        Ok(BandLu {
            u: self,
            piv,
            mult,
            pivot_ratio: max_piv / min_piv,
        })
    }
}

/// Factorization `P A = L U` of a [`BandMatrix`].
#[derive(Clone, Debug)]
pub struct BandLu {
    u: BandMatrix,
    piv: Vec<usize>,
    mult: Vec<f64>,
    /// Ratio of largest to smallest pivot magnitude, a cheap conditioning proxy.
    pub pivot_ratio: f64,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.u.n;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let kl = self.u.kl;
        let span = kl + self.u.ku;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk != 0.0 {
                let last = (k + kl).min(n - 1);
                for i in k + 1..=last {
                    x[i] -= self.mult[k * kl + (i - k - 1)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let hi = (k + span).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=hi {
                s -= self.u.get(k, j) * x[j];
            }
            x[k] = s / self.u.get(k, k);
        }
        Ok(x)
    }
}

/// Matrix sign function by the scaled Newton iteration `S <- (c S + (c S)^{-1}) / 2`.
pub fn sign_function(m: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let n = m.nrows();
    let mut s = m.clone();
    let mut last = f64::INFINITY;
    for it in 0..100 {
        let lu = s.clone().lu();
        let inv = lu.try_inverse().ok_or(LinalgError::Singular(it))?;
        let c = if it < 12 {
            let det = lu_abs_det(&s);
            if det.is_finite() && det > 0.0 {
                det.powf(-1.0 / n as f64)
            } else {
                1.0
            }
        } else {
            1.0
        };
        let next = (&s * c + inv / c) * 0.5;
        let corr = (&next - &s).norm() / next.norm();
        s = next;
        if corr < 1e-14 || (corr < 1e-10 && corr >= last) {
            return Ok(s);
        }
        last = corr;
    }
    Err(LinalgError::SignNoConvergence(last))
}

fn lu_abs_det(m: &DMatrix<f64>) -> f64 {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut logdet = 0.0;
    for i in 0..u.nrows() {
        logdet += u[(i, i)].abs().ln();
    }
    logdet.exp()
}

/// Projections onto the stable (`Re < 0`) and unstable (`Re > 0`) invariant subspaces.
pub fn spectral_projectors(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), LinalgError> {
    let n = m.nrows();
    let s = sign_function(m)?;
    let id = DMatrix::<f64>::identity(n, n);
    Ok(((&id - &s) * 0.5, (&id + &s) * 0.5))
}

/// Orthonormal rows spanning the row space of a projection `p` of known rank.
pub fn row_space(p: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let svd = p.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    DMatrix::from_fn(rank, p.ncols(), |i, j| vt[(order[i], j)])
}

/// Trace of a square matrix rounded to the nearest integer, i.e. the rank of a projection.
pub fn projection_rank(p: &DMatrix<f64>) -> usize {
    p.trace().round().max(0.0) as usize
}

pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_lu_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, kl, ku) = (40, 3, 5);
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dense = a.to_dense();
        let x = a.clone().lu().unwrap().solve(&b).unwrap();
        let xd = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-9 * (1.0 + xd[i].abs()));
        }
        let r = a.mul_vec(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn sign_of_diagonalizable_matrix() {
        let v = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 3.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-5.0, 0.3, 200.0]));
        let vi = v.clone().try_inverse().unwrap();
        let m = &v * d * &vi;
        let s = sign_function(&m).unwrap();
        let expect = &v * DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0])) * vi;
        assert!((s - expect).abs().max() < 1e-12);
        let (ps, pu) = spectral_projectors(&m).unwrap();
        assert_eq!(projection_rank(&ps), 1);
        assert_eq!(projection_rank(&pu), 2);
    }
}
