mod common;

use common::{tensor, GAMMA, KAPPA, S};
use kinshock::bvp::{build_ell, energy_diagnostic, solve_with_analysis};
use kinshock::chapman_enskog::TransportModel;
use kinshock::closure::{GalerkinClosure, PowerLawClosure};
use kinshock::fixedpoint::{FixedPointProblem, IterationOptions};
use kinshock::fluid::{rh_solve, HydroState};
use kinshock::hermite::{xi1_matrix, ProxyNorm};
use kinshock::kawashima::build_compensator;
use kinshock::ns_shock::{closure_frame, solve_profile, GridConfig, NSProfile, ShockFrame};
use nalgebra::DVector;

const ETA: f64 = 5e-4;

fn galerkin_profile(closure: &GalerkinClosure, eps: f64) -> NSProfile {
    let rh = rh_solve(HydroState::REFERENCE, eps).unwrap();
    let (frame, _) = closure_frame(&ShockFrame::from_rh(&rh), closure).unwrap();
    solve_profile(&frame, closure, &GridConfig::default()).unwrap()
}

fn problem(eps: f64, eta: f64) -> FixedPointProblem {
    let t = tensor(3);
    let closure = GalerkinClosure::new(&t, KAPPA);
    let model = TransportModel::new(&t, KAPPA).unwrap();
    let p = galerkin_profile(&closure, eps);
    let ell = build_ell(&p, &model).unwrap();
    FixedPointProblem::new(&p, &closure, KAPPA, &ell, eta, GAMMA, S).unwrap()
}

fn sup(f: &[DVector<f64>]) -> f64 {
    f.iter().map(|v| v.amax()).fold(0.0, f64::max)
}

#[test]
fn power_law_profile_is_monotone_and_attains_its_endpoints() {
    let closure = PowerLawClosure::new(0.135386, 0.380772, 1.0 - GAMMA / 2.0);
    let rh = rh_solve(HydroState::REFERENCE, 0.05).unwrap();
    let (frame, _) = closure_frame(&ShockFrame::from_rh(&rh), &closure).unwrap();
    let p = solve_profile(&frame, &closure, &GridConfig::default()).unwrap();
    assert_eq!(p.grid.len(), 801);
    assert!(p.left_error <= 1e-6 && p.right_error <= 1e-6);
    assert!(p.ode_residual <= 1e-9);
    assert!(p.states.windows(2).all(|w| w[1].rho <= w[0].rho + 1e-12));
    let peak = p.derivative.iter().map(|d| d[0].abs()).fold(0.0, f64::max);
    let worst = p.derivative.iter().map(|d| d[0]).fold(f64::MIN, f64::max);
    assert!(worst <= 1e-8 * peak, "rho' reaches {worst:e} against a peak of {peak:e}");
}

#[test]
fn error_term_at_zero_scales_as_eps_cubed() {
    let sizes: Vec<f64> = [0.05, 0.025]
        .iter()
        .map(|&eps| {
            let pr = problem(eps, ETA);
            let zeros = vec![DVector::zeros(pr.set.dim()); pr.background.grid.len()];
            sup(&pr.error_term(&zeros).unwrap())
        })
        .collect();
    let ratio = sizes[0] / sizes[1];
    println!("|E[0]| {sizes:?}, ratio {ratio}");
    assert!((ratio - 8.0).abs() <= 0.5 * 8.0, "ratio {ratio}");
}

#[test]
fn energy_functional_zero_and_linear_in_lambda() {
    let pr = problem(0.05, ETA);
    let n = pr.set.dim();
    let m = pr.background.grid.len();
    let zeros = vec![DVector::zeros(n); m];
    let z = pr.error_term(&zeros).unwrap();
    let g = pr.system.kinetic_source(&z).unwrap();
    let sys = pr.system.with_source(g).unwrap();
    let sol = solve_with_analysis(&sys, &pr.analysis, &pr.ell, 0.0).unwrap();
    let comp = build_compensator(&xi1_matrix(&pr.set), &pr.set, None, 0.1).unwrap();
    let gram = ProxyNorm::new(&pr.set, GAMMA, S).gram;

    let zero_states = vec![DVector::zeros(sys.dim()); m];
    let e0 = energy_diagnostic(&sys, &zero_states, &z, &comp.k, &gram, 1.0, 0.05).unwrap();
    assert_eq!(e0.energy_functional, 0.0);

    let e_l0 = energy_diagnostic(&sys, &sol.states, &z, &comp.k, &gram, 0.0, 0.05).unwrap();
    let e_l2 = energy_diagnostic(&sys, &sol.states, &z, &comp.k, &gram, 2.0, 0.05).unwrap();
    let e_l1 = energy_diagnostic(&sys, &sol.states, &z, &comp.k, &gram, 1.0, 0.05).unwrap();
    let zf = e_l1.energy_functional - e_l0.energy_functional;
    let diff = e_l2.energy_functional - e_l0.energy_functional - 2.0 * zf;
    assert!(diff.abs() <= 1e-12 * e_l2.energy_functional.abs().max(1.0), "{diff}");
    println!("energy constant {}", e_l1.constant);
    assert!(e_l1.constant.is_finite() && e_l1.constant <= 1e3);
}

#[test]
fn artificial_viscosity_sensitivity_is_first_order() {
    let solve = |eta: f64| {
        let pr = problem(0.05, eta);
        let zeros = vec![DVector::zeros(pr.set.dim()); pr.background.grid.len()];
        pr.step(&zeros, 0.0).unwrap().0
    };
    let f = [solve(4e-3), solve(2e-3), solve(1e-3)];
    let d1 = sup(&f[0].iter().zip(&f[1]).map(|(a, b)| a - b).collect::<Vec<_>>());
    let d2 = sup(&f[1].iter().zip(&f[2]).map(|(a, b)| a - b).collect::<Vec<_>>());
    println!("eta differences {d1:e} {d2:e}, ratio {}", d1 / d2);
    assert!(d2 <= d1 && d1 / d2 >= 1.5);
}

#[test]
fn outer_iteration_reports_history() {
    let pr = problem(0.05, ETA);
    let (state, shock) = kinshock::fixedpoint::iterate(&pr, &IterationOptions::default()).unwrap();
    assert!(state.converged);
    assert_eq!(state.history.len(), state.iterations);
    assert!(state.history.last().unwrap().step_norm <= 1e-10);
    assert!(state.history.windows(2).all(|w| w[1].step_norm < w[0].step_norm));
    assert_eq!(shock.coeffs.len(), pr.background.grid.len());
}
