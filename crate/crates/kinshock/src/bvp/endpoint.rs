use nalgebra::DMatrix;
use serde::Serialize;

use super::{BvpError, FirstOrderSystem};
use crate::linalg::{projection_rank, spectral_projectors};

/// Spectral data of the limiting matrices `M(-inf)` and `M(+inf)`.
#[derive(Clone, Debug, Serialize)]
pub struct EndpointAnalysis {
    /// Eigenvalues `(re, im)` sorted by real part.
    pub spectrum_minus: Vec<(f64, f64)>,
    pub spectrum_plus: Vec<(f64, f64)>,
    pub dim_unstable_minus: usize,
    pub dim_stable_minus: usize,
    pub dim_unstable_plus: usize,
    pub dim_stable_plus: usize,
    /// `min |Re lambda|` over both spectra.
    pub margin: f64,
    #[serde(skip)]
    pub stable_minus: DMatrix<f64>,
    #[serde(skip)]
    pub unstable_minus: DMatrix<f64>,
    #[serde(skip)]
    pub stable_plus: DMatrix<f64>,
    #[serde(skip)]
    pub unstable_plus: DMatrix<f64>,
}

impl EndpointAnalysis {
    pub fn dimension_sum(&self) -> usize {
        self.dim_unstable_minus + self.dim_stable_plus
    }
}

pub fn sorted_spectrum(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut ev: Vec<(f64, f64)> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    ev
}

/// Relative size below which a real part counts as lying on the imaginary axis.
const AXIS_TOL: f64 = 1e-10;

pub fn endpoint_analysis(system: &FirstOrderSystem) -> Result<EndpointAnalysis, BvpError> {
    let n = system.dim();
    let spectrum_minus = sorted_spectrum(&system.a_minus);
    let spectrum_plus = sorted_spectrum(&system.a_plus);
    let scale = system.a_minus.amax().max(system.a_plus.amax()).max(1.0);
    let mut margin = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    for &(re, im) in spectrum_minus.iter().chain(&spectrum_plus) {
        if re.abs() < margin {
            margin = re.abs();
            worst = (re, im);
        }
    }
    if margin <= AXIS_TOL * scale {
        return Err(BvpError::ImaginaryAxisEigenvalue {
            re: worst.0,
            im: worst.1,
            margin,
        });
    }
    let (sm, um) = spectral_projectors(&system.a_minus)?;
    let (sp, up) = spectral_projectors(&system.a_plus)?;
    let count = |eigs: &[(f64, f64)], pos: bool| eigs.iter().filter(|z| (z.0 > 0.0) == pos).count();
    let out = EndpointAnalysis {
        dim_unstable_minus: count(&spectrum_minus, true),
        dim_stable_minus: count(&spectrum_minus, false),
        dim_unstable_plus: count(&spectrum_plus, true),
        dim_stable_plus: count(&spectrum_plus, false),
        spectrum_minus,
        spectrum_plus,
        margin,
        stable_minus: sm,
        unstable_minus: um,
        stable_plus: sp,
        unstable_plus: up,
    };
    for (p, d) in [
        (&out.stable_minus, out.dim_stable_minus),
        (&out.unstable_minus, out.dim_unstable_minus),
        (&out.stable_plus, out.dim_stable_plus),
        (&out.unstable_plus, out.dim_unstable_plus),
    ] {
        if projection_rank(p) != d {
            return Err(BvpError::Numerical(format!(
                "spectral projection rank {} disagrees with eigenvalue count {d} (n = {n})",
                projection_rank(p)
            )));
        }
    }
    Ok(out)
}
