//! Conjugation of the nonautonomous system to its limits on each half-line and
//! the matched variation-of-constants solve built from it.
//!
//! On `[0, inf)` the system is written as `u' + A(x) u = h` and one seeks `T`
//! with `T' + A T - T A_inf = 0`, `T(inf) = I`, as the fixed point of
//! `R[T](x) = I - int_0^x e^{(y-x)L} P+ [A~ T](y) dy + int_x^inf e^{(y-x)L} P- [A~ T](y) dy`
//! with `L T = [A_inf, T]`, `A~ = A - A_inf` and `P+-` the spectral projections
//! of `L` across the line `Re = threshold`. In the eigenbasis of `A_inf`,
//! `L` acts entrywise by `lambda_i - lambda_j`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::expint::{complexify, convolve_backward, convolve_forward, eigen, Eigen, C64};
use super::{endpoint_analysis, BvpError, FirstOrderSystem};
use crate::stencil::{derivative_vectors_width, uniform_spacing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Conjugating transform on one half-line, indexed by distance from `x = 0`.
#[derive(Clone, Debug)]
pub struct Conjugation {
    pub side: Side,
    /// `|x|` at each half-grid node, increasing from 0.
    pub distance: Vec<f64>,
    pub transform: Vec<DMatrix<f64>>,
    pub theta: f64,
    pub threshold: f64,
    pub iterations: usize,
    /// `sup e^{theta |x|} |T(x) - I|`.
    pub c1: f64,
    /// Least-squares decay exponent of `|T - I|` on the outer half of the half-line.
    pub decay_rate: f64,
    /// `max |T' + A T - T A_inf|` with `T'` from fourth-order stencils.
    pub residual: f64,
    /// First node of the fixed-point region; nodes before it were obtained by
    /// integrating the conjugation equation inward.
    pub origin_shift: usize,
}

/// Half-line data in the `u' + A(x) u = h` convention.
struct HalfLine {
    distance: Vec<f64>,
    a: Vec<DMatrix<f64>>,
    a_inf: DMatrix<f64>,
}

fn half_line(system: &FirstOrderSystem, side: Side) -> HalfLine {
    let c = system.center_index();
    let m = system.grid.len();
    match side {
        Side::Right => {
            let nodes: Vec<usize> = (c..m).collect();
            HalfLine {
                distance: nodes.iter().map(|&i| system.grid[i] - system.grid[c]).collect(),
                a: nodes.iter().map(|&i| -&system.coeffs[i]).collect(),
                a_inf: -&system.a_plus,
            }
        }
        Side::Left => {
            let nodes: Vec<usize> = (0..=c).rev().collect();
            HalfLine {
                distance: nodes.iter().map(|&i| system.grid[c] - system.grid[i]).collect(),
                a: nodes.iter().map(|&i| system.coeffs[i].clone()).collect(),
                a_inf: system.a_minus.clone(),
            }
        }
    }
}

fn to_eigenbasis(e: &Eigen, m: &DMatrix<f64>) -> DMatrix<C64> {
    &e.inv * complexify(m) * &e.vecs
}

fn from_eigenbasis(e: &Eigen, m: &DMatrix<C64>) -> DMatrix<f64> {
    (&e.vecs * m * &e.inv).map(|z| z.re)
}

/// One application of the variation-of-constants map in the eigenbasis.
fn apply_r(e: &Eigen, a_hat: &[DMatrix<C64>], t_hat: &[DMatrix<C64>], h: f64, threshold: f64) -> Vec<DMatrix<C64>> {
    let n = e.values.len();
    let m = t_hat.len();
    let g: Vec<DMatrix<C64>> = a_hat.iter().zip(t_hat).map(|(a, t)| a * t).collect();
    let mut out: Vec<DMatrix<C64>> = vec![DMatrix::<C64>::identity(n, n); m];
    let mut series = vec![C64::new(0.0, 0.0); m];
    for i in 0..n {
        for j in 0..n {
            let mu = e.values[i] - e.values[j];
            for k in 0..m {
                series[k] = g[k][(i, j)];
            }
            if mu.re > threshold {
                let conv = convolve_forward(-mu, &series, h);
                for k in 0..m {
                    out[k][(i, j)] -= conv[k];
                }
            } else {
                let conv = convolve_backward(mu, &series, h);
                for k in 0..m {
                    out[k][(i, j)] += conv[k];
                }
            }
        }
    }
    out
}

/// Classical RK4 inward from node `start` to node 0 for `T' = -A T + T A_inf`,
/// with step `2h` so that midpoints are grid nodes.
fn integrate_inward(half: &HalfLine, t: &mut [DMatrix<f64>], start: usize) {
    let rhs = |k: usize, tm: &DMatrix<f64>| -(&half.a[k] * tm) + tm * &half.a_inf;
    let h = half.distance[1] - half.distance[0];
    let mut k = start;
    while k >= 2 {
        let step = -2.0 * h;
        let y = t[k].clone();
        let k1 = rhs(k, &y);
        let k2 = rhs(k - 1, &(&y + &k1 * (0.5 * step)));
        let k3 = rhs(k - 1, &(&y + &k2 * (0.5 * step)));
        let k4 = rhs(k - 2, &(&y + &k3 * step));
        let mid = &y + (&k1 + &k2) * (0.25 * step);
        t[k - 1] = mid;
        t[k - 2] = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
        k -= 2;
    }
    if k == 1 {
        let step = -h;
        let y = t[1].clone();
        let k1 = rhs(1, &y);
        let k4 = rhs(0, &(&y + &k1 * step));
        t[0] = &y + (k1 + k4) * (0.5 * step);
    }
}

/// Negated least-squares slope of `ln y` against `x`, over entries above roundoff.
fn fit_decay(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 1e-13)
        .map(|(&a, &v)| (a, v.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -num / den
}

/// Conjugating transform for one side of the system, decay rate `theta` and
/// projection threshold `threshold` (between `theta` and the decay rate of
/// the coefficients).
pub fn conjugation_transform(
    system: &FirstOrderSystem,
    side: Side,
    theta: f64,
    threshold: f64,
) -> Result<Conjugation, BvpError> {
    let h = uniform_spacing(&system.grid)
        .ok_or_else(|| BvpError::GridMismatch("grid must be uniform".into()))?;
    if !(theta > 0.0 && threshold > theta) {
        return Err(BvpError::ContractionFailure(format!(
            "need 0 < theta < threshold, got theta = {theta}, threshold = {threshold}"
        )));
    }
    let half = half_line(system, side);
    let e = eigen(&half.a_inf)?;
    let m = half.distance.len();
    let n = system.dim();
    let a_hat_full: Vec<DMatrix<C64>> = half.a.iter().map(|a| to_eigenbasis(&e, &(a - &half.a_inf))).collect();

    let mut shift = 0usize;
    loop {
        let a_hat = &a_hat_full[shift..];
        let mut t_hat: Vec<DMatrix<C64>> = vec![DMatrix::<C64>::identity(n, n); m - shift];
        let mut converged = false;
        let mut iterations = 0;
        let mut last = f64::INFINITY;
        for it in 0..200 {
            iterations = it + 1;
            let next = apply_r(&e, a_hat, &t_hat, h, threshold);
            let mut diff = 0.0f64;
            for k in 0..next.len() {
                let w = (theta * half.distance[shift + k]).exp();
                let dk = (&next[k] - &t_hat[k]).iter().map(|z| z.norm()).fold(0.0, f64::max);
                diff = diff.max(w * dk);
            }
            t_hat = next;
            if !diff.is_finite() || (it > 3 && diff > 0.9 * last && diff > 1e-13) {
                break;
            }
            if diff < 1e-14 {
                converged = true;
                break;
            }
            last = diff;
        }
        if converged {
            let mut t: Vec<DMatrix<f64>> = vec![DMatrix::identity(n, n); m];
            for (k, th) in t_hat.iter().enumerate() {
                t[shift + k] = from_eigenbasis(&e, th);
            }
            if shift > 0 {
                integrate_inward(&half, &mut t, shift);
            }
            let flat: Vec<DVector<f64>> = t.iter().map(|x| DVector::from_column_slice(x.as_slice())).collect();
            let dt = derivative_vectors_width(&flat, h, 7);
            let mut residual = 0.0f64;
            let mut c1 = 0.0f64;
            let id = DMatrix::<f64>::identity(n, n);
            let mut gap = Vec::with_capacity(m);
            for k in 0..m {
                let d = DMatrix::from_column_slice(n, n, dt[k].as_slice());
                let r = d + &half.a[k] * &t[k] - &t[k] * &half.a_inf;
                residual = residual.max(r.amax());
                let g = (&t[k] - &id).amax();
                c1 = c1.max((theta * half.distance[k]).exp() * g);
                gap.push(g);
            }
            let decay_rate = fit_decay(&half.distance[m / 2..], &gap[m / 2..]);
            return Ok(Conjugation {
                side,
                distance: half.distance.clone(),
                transform: t,
                theta,
                threshold,
                iterations,
                c1,
                decay_rate,
                residual,
                origin_shift: shift,
            });
        }
        let next_shift = if shift == 0 { (m / 16).max(2) } else { shift * 2 };
        if next_shift >= m - 4 {
            return Err(BvpError::ContractionFailure(format!(
                "no contraction on any shifted half-line ({:?} side)",
                side
            )));
        }
        shift = next_shift;
    }
}

/// Bounded solution of the full-line problem from the conjugated half-line
/// problems, matched at `x = 0` together with `ell . F[..macro_dim](0) = d`.
pub fn matched_solve(
    system: &FirstOrderSystem,
    left: &Conjugation,
    right: &Conjugation,
    ell: &DVector<f64>,
    d: f64,
) -> Result<Vec<DVector<f64>>, BvpError> {
    let n = system.dim();
    let h = uniform_spacing(&system.grid)
        .ok_or_else(|| BvpError::GridMismatch("grid must be uniform".into()))?;
    let analysis = endpoint_analysis(system)?;
    if analysis.dimension_sum() != n + 1 {
        return Err(BvpError::SingularBvp("dimension count fails".into()));
    }
    let c = system.center_index();
    let m = system.grid.len();
    let right_nodes: Vec<usize> = (c..m).collect();
    let left_nodes: Vec<usize> = (0..=c).rev().collect();

    // Right half: z' = A+ z - T^{-1} G, modal c_j' = lambda_j c_j - g_j.
    let ep = eigen(&system.a_plus)?;
    let gr: Vec<DVector<C64>> = right_nodes
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let tinv = right.transform[k].clone().try_inverse().expect("invertible transform");
            &ep.inv * (tinv * &system.source[i]).map(|x| C64::new(x, 0.0))
        })
        .collect();
    // Left half in y = -x: z' = -A- z + T^{-1} G(-y), modal c_j' = -lambda_j c_j + g_j.
    let em = eigen(&system.a_minus)?;
    let gl: Vec<DVector<C64>> = left_nodes
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let tinv = left.transform[k].clone().try_inverse().expect("invertible transform");
            &em.inv * (tinv * &system.source[i]).map(|x| C64::new(x, 0.0))
        })
        .collect();

    let mr = right_nodes.len();
    let ml = left_nodes.len();
    let mut part_r = vec![DVector::<C64>::zeros(n); mr];
    let mut free_r = Vec::new();
    for j in 0..n {
        let lam = ep.values[j];
        let g: Vec<C64> = gr.iter().map(|v| v[j]).collect();
        if lam.re < 0.0 {
            let conv = convolve_forward(lam, &g, h);
            for k in 0..mr {
                part_r[k][j] = -conv[k];
            }
            free_r.push(j);
        } else {
            let conv = convolve_backward(-lam, &g, h);
            for k in 0..mr {
                part_r[k][j] = conv[k];
            }
        }
    }
    let mut part_l = vec![DVector::<C64>::zeros(n); ml];
    let mut free_l = Vec::new();
    for j in 0..n {
        let lam = em.values[j];
        let g: Vec<C64> = gl.iter().map(|v| v[j]).collect();
        if lam.re > 0.0 {
            let conv = convolve_forward(-lam, &g, h);
            for k in 0..ml {
                part_l[k][j] = conv[k];
            }
            free_l.push(j);
        } else {
            let conv = convolve_backward(lam, &g, h);
            for k in 0..ml {
                part_l[k][j] = -conv[k];
            }
        }
    }
    let unknowns = free_r.len() + free_l.len();
    if unknowns != n + 1 {
        return Err(BvpError::SingularBvp(format!("{unknowns} free modes for {} conditions", n + 1)));
    }
    let tr0 = complexify(&right.transform[0]) * &ep.vecs;
    let tl0 = complexify(&left.transform[0]) * &em.vecs;
    let mut sys = DMatrix::<C64>::zeros(n + 1, n + 1);
    let mut rhs = DVector::<C64>::zeros(n + 1);
    let base = &tl0 * &part_l[0] - &tr0 * &part_r[0];
    for i in 0..n {
        rhs[i] = base[i];
    }
    for (col, &j) in free_r.iter().enumerate() {
        for i in 0..n {
            sys[(i, col)] = tr0[(i, j)];
        }
    }
    for (col, &j) in free_l.iter().enumerate() {
        for i in 0..n {
            sys[(i, free_r.len() + col)] = -tl0[(i, j)];
        }
    }
    let f_part = &tr0 * &part_r[0];
    let mut phase_part = C64::new(0.0, 0.0);
    for i in 0..system.macro_dim {
        phase_part += f_part[i] * ell[i];
        for (col, &j) in free_r.iter().enumerate() {
            sys[(n, col)] += tr0[(i, j)] * ell[i];
        }
    }
    rhs[n] = C64::new(d, 0.0) - phase_part;
    let coef = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| BvpError::SingularBvp("matching system is singular".into()))?;
    let mut out = vec![DVector::<f64>::zeros(n); m];
    for (k, &i) in right_nodes.iter().enumerate() {
        let mut cvec = part_r[k].clone();
        for (col, &j) in free_r.iter().enumerate() {
            cvec[j] += coef[col] * (ep.values[j] * right.distance[k]).exp();
        }
        let f = complexify(&right.transform[k]) * &ep.vecs * cvec;
        out[i] = f.map(|z| z.re);
    }
    for (k, &i) in left_nodes.iter().enumerate().skip(1) {
        let mut cvec = part_l[k].clone();
        for (col, &j) in free_l.iter().enumerate() {
            cvec[j] += coef[free_r.len() + col] * (-em.values[j] * left.distance[k]).exp();
        }
        let f = complexify(&left.transform[k]) * &em.vecs * cvec;
        out[i] = f.map(|z| z.re);
    }
    Ok(out)
}
