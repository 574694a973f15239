//! One-dimensional Gauss rules built by the Golub-Welsch algorithm.
//!
//! Every rule returns nodes in increasing order together with positive
//! weights. Node symmetry is enforced explicitly for the symmetric weights so
//! that odd moments vanish to rounding.

use nalgebra::{DMatrix, SymmetricEigen};

/// A one-dimensional quadrature rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Affinely maps a rule on `[-1, 1]` to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }
}

fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> Rule {
    let n = diag.len();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = diag[i];
        if i + 1 < n {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

fn symmetrize(mut rule: Rule) -> Rule {
    let n = rule.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        let w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.0;
    }
    rule
}

/// Gauss-Hermite rule for the weight `exp(-x^2)` on the real line.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    symmetrize(golub_welsch(&diag, &off, std::f64::consts::PI.sqrt()))
}

/// Gauss-Hermite rule for the standard normal density `exp(-x^2/2)/sqrt(2 pi)`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    let base = gauss_hermite(n);
    let scale = std::f64::consts::SQRT_2;
    let norm = std::f64::consts::PI.sqrt();
    Rule {
        nodes: base.nodes.iter().map(|x| x * scale).collect(),
        weights: base.weights.iter().map(|w| w / norm).collect(),
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    symmetrize(golub_welsch(&diag, &off, 2.0))
}

/// Generalized Gauss-Laguerre rule for the weight `t^alpha exp(-t)` on `(0, inf)`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    assert!(alpha > -1.0, "Laguerre exponent must exceed -1");
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            (k * (k + alpha)).sqrt()
        })
        .collect();
    golub_welsch(&diag, &off, statrs::function::gamma::gamma(alpha + 1.0))
}

/// Gauss-Jacobi rule for the weight `(1 - x)^a (1 + x)^b` on `[-1, 1]`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
    let ab = a + b;
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                let t = 2.0 * k as f64 + ab;
                (b * b - a * a) / (t * (t + 2.0))
            }
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            let t = 2.0 * k + ab;
            (4.0 * k * (k + a) * (k + b) * (k + ab) / (t * t * (t + 1.0) * (t - 1.0))).sqrt()
        })
        .collect();
    use statrs::function::gamma::ln_gamma;
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    golub_welsch(&diag, &off, mu0)
}

/// Gauss rule for the weight `x^beta` on `[0, 1]`.
pub fn gauss_power_unit(n: usize, beta: f64) -> Rule {
    let base = gauss_jacobi(n, 0.0, beta);
    let scale = 0.5f64.powf(beta + 1.0);
    Rule {
        nodes: base.nodes.iter().map(|y| 0.5 * (1.0 + y)).collect(),
        weights: base.weights.iter().map(|w| w * scale).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite(8);
        let pi = std::f64::consts::PI;
        assert!((r.integrate(|_| 1.0) - pi.sqrt()).abs() < 1e-14);
        assert!((r.integrate(|x| x * x) - pi.sqrt() / 2.0).abs() < 1e-14);
        assert!((r.integrate(|x| x.powi(14)) - 135135.0 / 128.0 * pi.sqrt()).abs() < 1e-9);
        assert!(r.integrate(|x| x.powi(7)).abs() < 1e-14);
    }

    #[test]
    fn normal_moments() {
        let r = gauss_hermite_normal(6);
        assert!((r.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!((r.integrate(|x| x.powi(4)) - 3.0).abs() < 1e-13);
        assert!((r.integrate(|x| x.powi(10)) - 945.0).abs() < 1e-9);
    }

    #[test]
    fn legendre_moments() {
        let r = gauss_legendre(5);
        assert!((r.integrate(|x| x.powi(8)) - 2.0 / 9.0).abs() < 1e-14);
        let m = r.mapped(0.0, 2.0);
        assert!((m.integrate(|x| x.powi(3)) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn laguerre_moments() {
        let alpha = 0.75;
        let r = gauss_laguerre(6, alpha);
        for k in 0..12 {
            let exact = statrs::function::gamma::gamma(alpha + 1.0 + k as f64);
            let got = r.integrate(|t| t.powi(k));
            assert!(((got - exact) / exact).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn power_weight_moments() {
        let beta = 0.5;
        let r = gauss_power_unit(7, beta);
        for k in 0..14 {
            let exact = 1.0 / (k as f64 + beta + 1.0);
            assert!((r.integrate(|x| x.powi(k)) - exact).abs() < 1e-14, "k={k}");
        }
        let j = gauss_jacobi(6, 0.3, -0.4);
        let sum: f64 = j.weights.iter().sum();
        let exact = (0.9 * std::f64::consts::LN_2).exp()
            * statrs::function::gamma::gamma(1.3)
            * statrs::function::gamma::gamma(0.6)
            / statrs::function::gamma::gamma(1.9);
        assert!((sum - exact).abs() < 1e-13);
    }
}
