use nalgebra::{DMatrix, DVector};

use crate::fluid::{from_conserved, HydroState};
use crate::hermite::{maxwellian_coefficients, HermiteIndexSet, MacroState, SpectralVector};

use super::{BilinearForm, CollisionError, CollisionTensor};

const NEWTON_TOL: f64 = 1e-11;
const MAX_ITER: usize = 30;

/// Zero of `f -> (P f - macro, (I - P) Q(f, f))` near the continuum Maxwellian.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedMaxwellian {
    pub coeffs: SpectralVector,
    pub macro_state: MacroState,
    pub newton_residual: f64,
    pub iterations: usize,
}

/// Reusable Newton solver for discretized Maxwellians of one bilinear form.
#[derive(Clone, Debug)]
pub struct MaxwellianSolver<'a> {
    form: &'a BilinearForm,
    set: &'a HermiteIndexSet,
    macro_basis: DMatrix<f64>,
    micro_basis: DMatrix<f64>,
}

impl<'a> MaxwellianSolver<'a> {
    pub fn new(form: &'a BilinearForm, set: &'a HermiteIndexSet) -> Self {
        MaxwellianSolver {
            form,
            set,
            macro_basis: set.macro_basis(),
            micro_basis: set.micro_basis(),
        }
    }

    fn residual(&self, f: &DVector<f64>, m: &MacroState) -> DVector<f64> {
        let n = self.set.dim();
        let mut r = DVector::zeros(n);
        let pm = self.macro_basis.transpose() * f;
        for i in 0..3 {
            r[i] = pm[i] - m.a[i];
        }
        let q = self.micro_basis.transpose() * self.form.apply(f, f);
        r.rows_mut(3, n - 3).copy_from(&q);
        r
    }

    fn jacobian(&self, f: &DVector<f64>) -> DMatrix<f64> {
        let n = self.set.dim();
        let mut j = DMatrix::zeros(n, n);
        j.rows_mut(0, 3).copy_from(&self.macro_basis.transpose());
        let lin = self.micro_basis.transpose() * self.form.linearize(f);
        j.rows_mut(3, n - 3).copy_from(&lin);
        j
    }

    pub fn solve(&self, m: MacroState) -> Result<DiscretizedMaxwellian, CollisionError> {
        let start = match from_conserved(m.to_conserved()) {
            Ok(v) => v,
            Err(_) => HydroState::REFERENCE,
        };
        let mut f = maxwellian_coefficients(start, self.set).coeffs;
        let mut res = self.residual(&f, &m);
        let mut history = vec![res.norm()];
        let mut iterations = 0;
        while iterations < MAX_ITER {
            let rn = res.norm();
            if rn <= 1e-13 * f.norm().max(1.0) {
                break;
            }
            let step = self
                .jacobian(&f)
                .lu()
                .solve(&res)
                .ok_or_else(|| CollisionError::NewtonDivergence {
                    residuals: history.clone(),
                })?;
            let trial = &f - step;
            let trial_res = self.residual(&trial, &m);
            let tn = trial_res.norm();
            if !tn.is_finite() {
                return Err(CollisionError::NewtonDivergence { residuals: history });
            }
            if tn >= rn && rn <= NEWTON_TOL {
                break;
            }
            f = trial;
            res = trial_res;
            history.push(tn);
            iterations += 1;
        }
        let rn = res.norm();
        if rn > NEWTON_TOL {
            return Err(CollisionError::NewtonDivergence { residuals: history });
        }
        Ok(DiscretizedMaxwellian {
            coeffs: SpectralVector {
                degree: self.set.degree,
                coeffs: f,
            },
            macro_state: m,
            newton_residual: rn,
            iterations,
        })
    }

    /// Derivative of the discretized Maxwellian with respect to its macro
    /// coordinates, one column per coordinate, from the implicit function theorem.
    pub fn derivative(&self, f: &DVector<f64>) -> Result<DMatrix<f64>, CollisionError> {
        let n = self.set.dim();
        let mut rhs = DMatrix::zeros(n, 3);
        for i in 0..3 {
            rhs[(i, i)] = 1.0;
        }
        self.jacobian(f)
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CollisionError::EigSolverFailure("singular Maxwellian Jacobian".into()))
    }
}

pub fn discretized_maxwellian(
    tensor: &CollisionTensor,
    kappa: f64,
    m: MacroState,
) -> Result<DiscretizedMaxwellian, CollisionError> {
    let set = tensor.index_set();
    let form = tensor.form(kappa);
    MaxwellianSolver::new(&form, &set).solve(m)
}

/// `d M / d(a0, a1, a2)` at the discretized Maxwellian with macro coordinates `m`.
pub fn maxwellian_jacobian(
    tensor: &CollisionTensor,
    kappa: f64,
    m: MacroState,
) -> Result<DMatrix<f64>, CollisionError> {
    let set = tensor.index_set();
    let form = tensor.form(kappa);
    let solver = MaxwellianSolver::new(&form, &set);
    let dm = solver.solve(m)?;
    solver.derivative(&dm.coeffs.coeffs)
}
