//! Kinetic shock profiles for a spectral Boltzmann model.

pub mod acceptance;
pub mod bvp;
pub mod chapman_enskog;
pub mod closure;
pub mod collision;
pub mod config;
pub mod fixedpoint;
pub mod fluid;
pub mod hermite;
pub mod kawashima;
pub mod linalg;
pub mod ns_shock;
pub mod ode;
pub mod output;
pub mod pipeline;
pub mod quadrature;
pub mod stencil;
