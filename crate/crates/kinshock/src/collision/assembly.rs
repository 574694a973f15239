use std::f64::consts::PI;

use crate::hermite::{hermite_values, HermiteIndexSet};
use crate::quadrature::{gauss_hermite, gauss_laguerre, gauss_legendre, gauss_power_unit};

use super::{
    ordered_map, BilinearForm, CollisionError, CollisionTensor, KernelParams, QuadratureConfig,
};

/// Deflection-angle rule for `int_0^{pi/2} theta^{-1-2s} D(theta) dtheta` where
/// `D` vanishes quadratically at the origin.
///
/// Substituting `theta = (pi/2) x` gives `(pi/2)^{-2s} int_0^1 x^{1-2s} (D/x^2) dx`,
/// integrated by Gauss-Jacobi; `weights` already include the `1/x^2` factor.
#[derive(Clone, Debug)]
pub struct AngularRule {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AngularRule {
    pub fn new(n: usize, s: f64) -> Self {
        let base = gauss_power_unit(n, 1.0 - 2.0 * s);
        let half_pi = 0.5 * PI;
        let scale = half_pi.powf(-2.0 * s);
        AngularRule {
            theta: base.nodes.iter().map(|x| half_pi * x).collect(),
            weights: base
                .nodes
                .iter()
                .zip(&base.weights)
                .map(|(x, w)| scale * w / (x * x))
                .collect(),
        }
    }
}

struct Evaluator<'a> {
    set: &'a HermiteIndexSet,
    buf: [Vec<f64>; 3],
}

impl<'a> Evaluator<'a> {
    fn new(set: &'a HermiteIndexSet) -> Self {
        let n = set.degree + 1;
        Evaluator {
            set,
            buf: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    #[inline]
    fn eval(&mut self, x: &[f64; 3], out: &mut [f64]) {
        for d in 0..3 {
            hermite_values(x[d], &mut self.buf[d]);
        }
        for (o, a) in out.iter_mut().zip(&self.set.indices) {
            *o = self.buf[0][a[0]] * self.buf[1][a[1]] * self.buf[2][a[2]];
        }
    }
}

struct Direction {
    omega: [f64; 3],
    e1: [f64; 3],
    e2: [f64; 3],
    weight: f64,
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn sphere_directions(polar: usize, azimuth: usize) -> Vec<Direction> {
    let z = gauss_legendre(polar);
    let axes = [
        normalize([0.3141592653589793, 0.5772156649015329, 0.7548776662466927]),
        normalize([0.8, -0.1, 0.3]),
    ];
    let mut out = Vec::with_capacity(polar * azimuth);
    for (cz, wz) in z.nodes.iter().zip(&z.weights) {
        let sz = (1.0 - cz * cz).max(0.0).sqrt();
        for j in 0..azimuth {
            let phi = 2.0 * PI * j as f64 / azimuth as f64;
            let omega = [sz * phi.cos(), sz * phi.sin(), *cz];
            let c = cross(&axes[0], &omega);
            let c = if c.iter().map(|x| x * x).sum::<f64>() > 1e-4 {
                c
            } else {
                cross(&axes[1], &omega)
            };
            let e1 = normalize(c);
            let e2 = cross(&omega, &e1);
            out.push(Direction {
                omega,
                e1,
                e2,
                weight: wz * 2.0 * PI / azimuth as f64,
            });
        }
    }
    out
}

/// Assembles `<Q_{s,exponent}(psi_a, psi_b), psi_k>` symmetrized in `(a, b)`.
///
/// The radial exponent may be any value above `-1`, which lets tests probe
/// the Maxwell-molecule case `exponent = 0` against closed-form eigenvalues.
pub fn assemble_part(
    set: &HermiteIndexSet,
    exponent: f64,
    s: f64,
    quad: &QuadratureConfig,
) -> BilinearForm {
    let dim = set.dim();
    let g_rule = gauss_hermite(quad.g_order as usize);
    let lag = gauss_laguerre(quad.r_order as usize, 0.5 * (1.0 + exponent));
    let radial_scale = 2f64.powf(2.0 + exponent);
    let radial: Vec<(f64, f64)> = lag
        .nodes
        .iter()
        .zip(&lag.weights)
        .map(|(t, w)| (2.0 * t.sqrt(), w * radial_scale))
        .collect();
    let dirs = sphere_directions(quad.omega_polar as usize, quad.omega_azimuth as usize);
    let ang = AngularRule::new(quad.theta_nodes as usize, s);
    let n_phi = quad.phi_nodes as usize;
    let phis: Vec<(f64, f64)> = (0..n_phi)
        .map(|j| {
            let p = 2.0 * PI * j as f64 / n_phi as f64;
            (p.cos(), p.sin())
        })
        .collect();
    let w_phi = 2.0 * PI / n_phi as f64;
    let trig: Vec<(f64, f64, f64)> = ang
        .theta
        .iter()
        .zip(&ang.weights)
        .map(|(t, w)| (t.cos(), t.sin(), w * w_phi))
        .collect();
    let norm = (2.0 * PI).powi(-3);

    let ng = g_rule.len();
    let centres: Vec<([f64; 3], f64)> = (0..ng * ng * ng)
        .map(|idx| {
            let (i, j, k) = (idx / (ng * ng), (idx / ng) % ng, idx % ng);
            (
                [g_rule.nodes[i], g_rule.nodes[j], g_rule.nodes[k]],
                g_rule.weights[i] * g_rule.weights[j] * g_rule.weights[k] * norm,
            )
        })
        .collect();

    let partials = ordered_map(&centres, |(centre, wg)| {
        let mut acc = vec![0.0; dim * dim * dim];
        let mut ev = Evaluator::new(set);
        let mut u = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        let mut hp = vec![0.0; dim];
        let mut sk = vec![0.0; dim];
        for &(r, wr) in &radial {
            let h = 0.5 * r;
            for d in &dirs {
                let xi = [
                    centre[0] + h * d.omega[0],
                    centre[1] + h * d.omega[1],
                    centre[2] + h * d.omega[2],
                ];
                let xis = [
                    centre[0] - h * d.omega[0],
                    centre[1] - h * d.omega[1],
                    centre[2] - h * d.omega[2],
                ];
                ev.eval(&xi, &mut v);
                ev.eval(&xis, &mut u);
                sk.iter_mut().for_each(|x| *x = 0.0);
                for &(ct, st, wt) in &trig {
                    for &(cp, sp) in &phis {
                        let mut xp = [0.0; 3];
                        for c in 0..3 {
                            let sigma =
                                ct * d.omega[c] + st * (cp * d.e1[c] + sp * d.e2[c]);
                            xp[c] = centre[c] + h * sigma;
                        }
                        ev.eval(&xp, &mut hp);
                        for k in 0..dim {
                            sk[k] += wt * (hp[k] - v[k]);
                        }
                    }
                }
                let w = wg * wr * d.weight;
                for k in 0..dim {
                    let sw = w * sk[k];
                    if sw == 0.0 {
                        continue;
                    }
                    let block = &mut acc[k * dim * dim..(k + 1) * dim * dim];
                    for a in 0..dim {
                        let c = sw * u[a];
                        let row = &mut block[a * dim..(a + 1) * dim];
                        for b in 0..dim {
                            row[b] += c * v[b];
                        }
                    }
                }
            }
        }
        acc
    });

    let mut total = vec![0.0; dim * dim * dim];
    for p in &partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    let mut data = vec![0.0; dim * dim * dim];
    for k in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                let i = (k * dim + a) * dim + b;
                let j = (k * dim + b) * dim + a;
                data[i] = 0.5 * (total[i] + total[j]);
            }
        }
    }
    BilinearForm { dim, data }
}

/// Assembles the main tensor (velocity exponent `gamma`) and the lift tensor
/// (velocity exponent `2 - 2s`).
pub fn assemble_tensor(
    set: &HermiteIndexSet,
    params: &KernelParams,
    quad: &QuadratureConfig,
) -> Result<CollisionTensor, CollisionError> {
    params.validate()?;
    quad.validate(set.degree)?;
    let mut main = assemble_part(set, params.gamma, params.s, quad);
    let mut lift = assemble_part(set, 2.0 - 2.0 * params.s, params.s, quad);
    if params.c_b != 1.0 {
        main.data.iter_mut().for_each(|x| *x *= params.c_b);
        lift.data.iter_mut().for_each(|x| *x *= params.c_b);
    }
    Ok(CollisionTensor {
        degree: set.degree,
        gamma: params.gamma,
        s: params.s,
        quad: *quad,
        main,
        lift,
    })
}
