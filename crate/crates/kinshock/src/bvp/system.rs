//! Block structure of the linearized travelling-wave operator and its
//! first-order form `F' = M(x) F - G(x)` in the variables `(u, v, eta v')`.

use nalgebra::{DMatrix, DVector};

use super::BvpError;
use crate::collision::{ordered_map, BilinearForm, MaxwellianSolver};
use crate::hermite::{maxwellian_coefficients, xi1_matrix, HermiteIndexSet, MacroState};
use crate::ns_shock::{LiftMode, ProfileField, ShockFrame};

/// Blocks of `A - s` and of the linearized collision matrix in the
/// orthonormal macro/micro basis.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub a00: DMatrix<f64>,
    pub a01: DMatrix<f64>,
    pub a10: DMatrix<f64>,
    pub a11: DMatrix<f64>,
    pub l0: DMatrix<f64>,
    pub l1: DMatrix<f64>,
}

/// Orthonormal change of basis `[E | V]` between coefficients and
/// macro/micro coordinates.
#[derive(Clone, Debug)]
pub struct MacroMicroBasis {
    pub e: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl MacroMicroBasis {
    pub fn new(set: &HermiteIndexSet) -> Self {
        MacroMicroBasis {
            e: set.macro_basis(),
            v: set.micro_basis(),
        }
    }

    pub fn r(&self) -> usize {
        self.v.ncols()
    }

    pub fn split(&self, f: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (self.e.transpose() * f, self.v.transpose() * f)
    }

    pub fn join(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.e * u + &self.v * v
    }

    pub fn blocks(&self, a_minus_s: &DMatrix<f64>, l: &DMatrix<f64>) -> Blocks {
        let (e, v) = (&self.e, &self.v);
        Blocks {
            a00: e.transpose() * a_minus_s * e,
            a01: e.transpose() * a_minus_s * v,
            a10: v.transpose() * a_minus_s * e,
            a11: v.transpose() * a_minus_s * v,
            l0: v.transpose() * l * e,
            l1: v.transpose() * l * v,
        }
    }

    /// Coefficients `f` and `f'` from a first-order state `(u, v, eta v')`.
    pub fn extract(&self, state: &DVector<f64>, blocks: &Blocks, eta: f64) -> (DVector<f64>, DVector<f64>) {
        let r = self.r();
        let u = state.rows(0, 3).into_owned();
        let v = state.rows(3, r).into_owned();
        let dv = state.rows(3 + r, r) / eta;
        let du = (&blocks.a00 * &u + &blocks.a01 * &v) / eta;
        (self.join(&u, &v), self.join(&du, &dv))
    }
}

/// Matrix of the first-order system in the variables `(u, v, eta v')`, of size `3 + 2r`.
pub fn first_order_matrix(b: &Blocks, eta: f64) -> DMatrix<f64> {
    let r = b.a11.nrows();
    let n = 3 + 2 * r;
    let ie = 1.0 / eta;
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (3, 3)).copy_from(&(&b.a00 * ie));
    m.view_mut((0, 3), (3, r)).copy_from(&(&b.a01 * ie));
    for i in 0..r {
        m[(3 + i, 3 + r + i)] = ie;
    }
    m.view_mut((3 + r, 0), (r, 3))
        .copy_from(&(&b.a10 * &b.a00 * ie - &b.l0));
    m.view_mut((3 + r, 3), (r, r))
        .copy_from(&(&b.a10 * &b.a01 * ie - &b.l1));
    m.view_mut((3 + r, 3 + r), (r, r)).copy_from(&(&b.a11 * ie));
    m
}

/// Linear system `F' = M(x) F - G(x)` sampled on a uniform grid, with the
/// limits of `M` at both ends.
#[derive(Clone, Debug)]
pub struct FirstOrderSystem {
    pub grid: Vec<f64>,
    pub coeffs: Vec<DMatrix<f64>>,
    pub source: Vec<DVector<f64>>,
    pub a_minus: DMatrix<f64>,
    pub a_plus: DMatrix<f64>,
    pub eta: f64,
    /// Number of leading state components the phase condition acts on.
    pub macro_dim: usize,
    /// Macro/micro basis and per-node blocks when the system comes from a profile.
    pub kinetic: Option<KineticData>,
}

#[derive(Clone, Debug)]
pub struct KineticData {
    pub basis: MacroMicroBasis,
    pub blocks: Vec<Blocks>,
}

impl FirstOrderSystem {
    pub fn dim(&self) -> usize {
        self.a_minus.nrows()
    }

    /// Index of the node closest to `x = 0`.
    pub fn center_index(&self) -> usize {
        let mut best = 0;
        for (i, x) in self.grid.iter().enumerate() {
            if x.abs() < self.grid[best].abs() {
                best = i;
            }
        }
        best
    }

    /// Same coefficients with a different source.
    pub fn with_source(&self, source: Vec<DVector<f64>>) -> Result<Self, BvpError> {
        if source.len() != self.grid.len() {
            return Err(BvpError::GridMismatch(format!(
                "{} source nodes for {} grid nodes",
                source.len(),
                self.grid.len()
            )));
        }
        let mut out = self.clone();
        out.source = source;
        Ok(out)
    }

    /// Source `(0, 0, V^T z)` for per-node microscopic coefficient vectors `z`.
    pub fn kinetic_source(&self, z: &[DVector<f64>]) -> Result<Vec<DVector<f64>>, BvpError> {
        let kin = self
            .kinetic
            .as_ref()
            .ok_or_else(|| BvpError::Numerical("system has no kinetic structure".into()))?;
        micro_source(&kin.basis, z)
    }
}

const MICRO_TOL: f64 = 1e-9;

fn micro_source(basis: &MacroMicroBasis, z: &[DVector<f64>]) -> Result<Vec<DVector<f64>>, BvpError> {
    let r = basis.r();
    z.iter()
        .enumerate()
        .map(|(i, zi)| {
            let (mac, mic) = basis.split(zi);
            let macro_norm = mac.amax();
            if macro_norm > MICRO_TOL * zi.amax().max(1.0) {
                return Err(BvpError::NonMicroscopicSource { node: i, macro_norm });
            }
            let mut g = DVector::zeros(3 + 2 * r);
            g.rows_mut(3 + r, r).copy_from(&mic);
            Ok(g)
        })
        .collect()
}

/// Background coefficients at the two endpoint states, in the lift mode of the field.
pub fn endpoint_backgrounds(
    frame: &ShockFrame,
    form: &BilinearForm,
    set: &HermiteIndexSet,
    mode: LiftMode,
) -> Result<(DVector<f64>, DVector<f64>), BvpError> {
    let one = |v| -> Result<DVector<f64>, BvpError> {
        Ok(match mode {
            LiftMode::Continuum => maxwellian_coefficients(v, set).coeffs,
            LiftMode::Discretized => {
                MaxwellianSolver::new(form, set)
                    .solve(MacroState::from_hydro(v))?
                    .coeffs
                    .coeffs
            }
        })
    };
    Ok((one(frame.v_minus)?, one(frame.v_plus)?))
}

/// First-order system of `(A - s) f' - eta f'' - L f = z` linearized about the
/// lifted profile, `z` given per node as microscopic coefficient vectors.
pub fn assemble_system(
    field: &ProfileField,
    form: &BilinearForm,
    set: &HermiteIndexSet,
    frame: &ShockFrame,
    eta: f64,
    z: &[DVector<f64>],
) -> Result<FirstOrderSystem, BvpError> {
    if !(eta > 0.0) {
        return Err(BvpError::Numerical(format!("artificial viscosity must be positive, got {eta}")));
    }
    if z.len() != field.grid.len() {
        return Err(BvpError::GridMismatch(format!(
            "{} source nodes for {} grid nodes",
            z.len(),
            field.grid.len()
        )));
    }
    let basis = MacroMicroBasis::new(set);
    let n = set.dim();
    let a_minus_s = xi1_matrix(set) - DMatrix::identity(n, n) * frame.speed;
    let blocks: Vec<Blocks> = ordered_map(&field.coeffs, |m| basis.blocks(&a_minus_s, &form.linearize(m)));
    let coeffs: Vec<DMatrix<f64>> = blocks.iter().map(|b| first_order_matrix(b, eta)).collect();
    let (mm, mp) = endpoint_backgrounds(frame, form, set, field.mode)?;
    let a_minus = first_order_matrix(&basis.blocks(&a_minus_s, &form.linearize(&mm)), eta);
    let a_plus = first_order_matrix(&basis.blocks(&a_minus_s, &form.linearize(&mp)), eta);
    let source = micro_source(&basis, z)?;
    Ok(FirstOrderSystem {
        grid: field.grid.clone(),
        coeffs,
        source,
        a_minus,
        a_plus,
        eta,
        macro_dim: 3,
        kinetic: Some(KineticData { basis, blocks }),
    })
}
