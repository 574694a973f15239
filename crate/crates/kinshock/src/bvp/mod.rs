//! Linearized travelling-wave boundary-value problem: first-order form,
//! endpoint dichotomies, the collocation solve and its cross-checks.

pub mod collocation;
pub mod conjugation;
pub mod endpoint;
pub mod energy;
pub mod expint;
pub mod macro_pack;
pub mod system;

use thiserror::Error;

use crate::chapman_enskog::CeError;
use crate::collision::CollisionError;
use crate::fluid::HydroState;
use crate::linalg::LinalgError;

pub use collocation::{ode_defect, solve_bvp, solve_with_analysis, BvpSolution};
pub use conjugation::{conjugation_transform, matched_solve, Conjugation, Side};
pub use endpoint::{endpoint_analysis, EndpointAnalysis};
pub use energy::{energy_diagnostic, EnergyReport};
pub use macro_pack::{build_ell, macro_ode_matrices, MacroOdePack};
pub use system::{assemble_system, first_order_matrix, Blocks, FirstOrderSystem, MacroMicroBasis};

#[derive(Debug, Error)]
pub enum BvpError {
    #[error("sonic point: |s - u| too small at {state:?} with s = {speed}")]
    SonicDegeneracy { state: HydroState, speed: f64 },
    #[error("source at node {node} has macroscopic part {macro_norm:e}")]
    NonMicroscopicSource { node: usize, macro_norm: f64 },
    #[error("eigenvalue {re:e}{im:+e}i on or near the imaginary axis (margin {margin:e})")]
    ImaginaryAxisEigenvalue { re: f64, im: f64, margin: f64 },
    #[error("boundary-value system is singular: {0}")]
    SingularBvp(String),
    #[error("conjugation iteration failed to contract: {0}")]
    ContractionFailure(String),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Transport(#[from] CeError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
}
