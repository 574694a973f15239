mod common;

use common::{tensor, KAPPA};
use kinshock::chapman_enskog::{diffusion_matrix, TransportModel};
use kinshock::closure::{hydro_to_macro, EulerClosure, GalerkinClosure, HydroClosure};
use kinshock::collision::{assemble_tensor, KernelParams, QuadratureConfig};
use kinshock::fluid::HydroState;
use kinshock::hermite::build_index_set;

#[test]
fn diffusion_matrix_structure() {
    let model = TransportModel::new(&tensor(3), KAPPA).unwrap();
    let v = HydroState {
        rho: 1.3,
        u: -0.4,
        t: 1.2,
    };
    let d = diffusion_matrix(v, &model).unwrap().0;
    let (mu, heat) = model.at(v.t).unwrap();
    assert_eq!(d.row(0).amax(), 0.0);
    assert_eq!((d[(1, 1)], d[(2, 1)], d[(2, 2)]), (mu, mu * v.u, heat));
    assert_eq!((d[(1, 0)], d[(1, 2)], d[(2, 0)]), (0.0, 0.0, 0.0));
    let denser = HydroState { rho: 4.0, ..v };
    assert_eq!(diffusion_matrix(denser, &model).unwrap().0, d);
}

#[test]
fn lift_dependence_is_first_order() {
    let model = TransportModel::new(&tensor(3), 0.0).unwrap();
    let (mu0, _) = model.reference_direct(0.0).unwrap();
    let slope = |k: f64| (model.reference_direct(k).unwrap().0 - mu0) / k;
    let (a, b) = (slope(0.01), slope(0.005));
    assert!(((a - b) / b).abs() <= 0.2, "slopes {a} and {b}");
}

#[test]
fn galerkin_closure_reproduces_the_diffusion_matrix() {
    let t = tensor(3);
    let galerkin = GalerkinClosure::new(&t, KAPPA);
    let euler = EulerClosure::new(TransportModel::new(&t, KAPPA).unwrap());
    let a = hydro_to_macro(HydroState::REFERENCE);
    let (jg, bg) = galerkin.evaluate(&a).unwrap();
    let (je, be) = euler.evaluate(&a).unwrap();
    assert!((jg - je).amax() <= 1e-12);
    assert!((bg - be).amax() <= 1e-6 * be.amax(), "{bg} vs {be}");
}

#[test]
fn coefficients_positive_across_kernels() {
    let set = build_index_set(3).unwrap();
    let quad = QuadratureConfig::for_degree(3);
    for gamma in [0.2, 0.5, 0.8] {
        for s in [0.1, 0.25, 0.4] {
            let t = assemble_tensor(&set, &KernelParams::new(gamma, s, 0.0).unwrap(), &quad).unwrap();
            for kappa in [0.0, 0.05, 0.1] {
                let c = TransportModel::new(&t, kappa).unwrap().coeffs;
                assert!(c.mu_tilde > 0.0 && c.kappa_tilde > 0.0, "gamma {gamma}, s {s}, kappa {kappa}: {c:?}");
            }
        }
    }
}
