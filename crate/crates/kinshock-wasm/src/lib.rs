//! WebAssembly bindings for the browser demo. Every exported function returns
//! a JSON document; the plain Rust functions behind them return typed reports.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use kinshock::closure::PowerLawClosure;
use kinshock::fluid::{rh_solve, HydroState};
use kinshock::hermite::{build_index_set, maxwellian_coefficients};
use kinshock::ns_shock::{profile_diagnostics, solve_profile, GridConfig, ShockFrame};

#[derive(Debug, Serialize)]
pub struct ProfileReport {
    pub epsilon: f64,
    pub speed: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub t: Vec<f64>,
    pub ode_residual: f64,
    pub center_slope: f64,
    pub decay_left: f64,
    pub decay_right: f64,
}

/// Navier-Stokes shock profile with power-law transport `mu(T) = mu_ref T^(1 - gamma/2)`.
pub fn profile_report(epsilon: f64, mu_ref: f64, heat_ref: f64, gamma: f64, nodes: usize) -> Result<ProfileReport, String> {
    if !(mu_ref > 0.0 && heat_ref > 0.0) {
        return Err("transport coefficients must be positive".into());
    }
    let rh = rh_solve(HydroState::REFERENCE, epsilon).map_err(|e| e.to_string())?;
    let frame = ShockFrame::from_rh(&rh);
    let closure = PowerLawClosure::new(mu_ref, heat_ref, 1.0 - 0.5 * gamma);
    let grid = GridConfig {
        half_length: 10.0,
        nodes,
    };
    let p = solve_profile(&frame, &closure, &grid).map_err(|e| e.to_string())?;
    let d = profile_diagnostics(&p, &closure).map_err(|e| e.to_string())?;
    Ok(ProfileReport {
        epsilon,
        speed: frame.speed,
        rho: p.states.iter().map(|s| s.rho).collect(),
        u: p.states.iter().map(|s| s.u).collect(),
        t: p.states.iter().map(|s| s.t).collect(),
        x: p.grid,
        ode_residual: p.ode_residual,
        center_slope: d.center_slope,
        decay_left: d.decay_left,
        decay_right: d.decay_right,
    })
}

#[derive(Debug, Serialize)]
pub struct RhPoint {
    pub epsilon: f64,
    pub speed: f64,
    pub rho_plus: f64,
    pub u_plus: f64,
    pub t_plus: f64,
    pub residual: f64,
}

/// Right states and speeds of the 3-shock family from the reference state.
pub fn rh_points(eps_max: f64, count: usize) -> Result<Vec<RhPoint>, String> {
    if !(eps_max > 0.0) || count < 2 {
        return Err("need eps_max > 0 and at least two points".into());
    }
    (1..=count)
        .map(|k| {
            let eps = eps_max * k as f64 / count as f64;
            let rh = rh_solve(HydroState::REFERENCE, eps).map_err(|e| e.to_string())?;
            Ok(RhPoint {
                epsilon: eps,
                speed: rh.speed,
                rho_plus: rh.v_plus.rho,
                u_plus: rh.v_plus.u,
                t_plus: rh.v_plus.t,
                residual: rh.residual,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Coefficient {
    pub index: [usize; 3],
    pub value: f64,
}

/// Hermite coefficients of the Maxwellian with the given moments, truncated at `degree`.
pub fn maxwellian_report(rho: f64, u: f64, t: f64, degree: usize) -> Result<Vec<Coefficient>, String> {
    if degree > 12 {
        return Err("degree above 12 is not offered in the demo".into());
    }
    let v = HydroState::new(rho, u, t).map_err(|e| e.to_string())?;
    let set = build_index_set(degree).map_err(|e| e.to_string())?;
    let m = maxwellian_coefficients(v, &set);
    Ok(set
        .indices
        .iter()
        .zip(m.coeffs.iter())
        .map(|(a, c)| Coefficient {
            index: [a[0], a[1], a[2]],
            value: *c,
        })
        .collect())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn ns_profile(epsilon: f64, mu_ref: f64, heat_ref: f64, gamma: f64, nodes: usize) -> Result<String, JsError> {
    to_js(profile_report(epsilon, mu_ref, heat_ref, gamma, nodes))
}

#[wasm_bindgen]
pub fn rh_curve(eps_max: f64, count: usize) -> Result<String, JsError> {
    to_js(rh_points(eps_max, count))
}

#[wasm_bindgen]
pub fn maxwellian(rho: f64, u: f64, t: f64, degree: usize) -> Result<String, JsError> {
    to_js(maxwellian_report(rho, u, t, degree))
}
