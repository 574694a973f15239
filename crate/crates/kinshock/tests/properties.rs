use kinshock::fluid::{char_fields, from_conserved, rh_residual, rh_solve, to_conserved, HydroState};
use kinshock::hermite::{build_index_set, lift_macro, macro_split, maxwellian_coefficients, SpectralVector};
use kinshock::pipeline::moments;
use nalgebra::DVector;
use proptest::prelude::*;

fn state() -> impl Strategy<Value = HydroState> {
    (0.2f64..5.0, -2.0f64..2.0, 0.2f64..5.0).prop_map(|(rho, u, t)| HydroState { rho, u, t })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conserved_round_trip(v in state()) {
        let back = from_conserved(to_conserved(v)).unwrap();
        prop_assert!((back.rho - v.rho).abs() <= 1e-12 * v.rho);
        prop_assert!((back.u - v.u).abs() <= 1e-12 * (1.0 + v.u.abs()));
        prop_assert!((back.t - v.t).abs() <= 1e-12 * v.t);
    }

    #[test]
    fn characteristic_fields_solve_the_eigenproblem(v in state()) {
        let cf = char_fields(v);
        prop_assert!(cf.max_residual(v) <= 1e-12 * (1.0 + v.rho + v.t + v.u.abs()).powi(2));
        prop_assert!(cf.lambdas[0] < cf.lambdas[1] && cf.lambdas[1] < cf.lambdas[2]);
    }

    #[test]
    fn rankine_hugoniot_and_lax(eps in 1e-4f64..0.1) {
        let rh = rh_solve(HydroState::REFERENCE, eps).unwrap();
        let r = rh_residual(rh.v_minus, rh.v_plus, rh.speed);
        prop_assert!(r.norm() <= 1e-12);
        prop_assert!(char_fields(rh.v_minus).lambdas[2] > rh.speed);
        prop_assert!(char_fields(rh.v_plus).lambdas[2] < rh.speed);
        prop_assert!(rh.v_minus.rho > rh.v_plus.rho && rh.v_minus.t > rh.v_plus.t);
    }

    #[test]
    fn maxwellian_coefficients_reproduce_moments(v in state(), degree in 3usize..7) {
        let set = build_index_set(degree).unwrap();
        let m = moments(&maxwellian_coefficients(v, &set).coeffs, &set).unwrap();
        prop_assert!((m.rho - v.rho).abs() <= 1e-10 * v.rho);
        prop_assert!((m.u - v.u).abs() <= 1e-10 * (1.0 + v.u.abs()));
        prop_assert!((m.t - v.t).abs() <= 1e-10 * v.t);
    }

    #[test]
    fn macro_split_is_orthogonal(seed in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let set = build_index_set(3).unwrap();
        prop_assert_eq!(set.dim(), 8);
        let f = SpectralVector::new(&set, DVector::from_vec(seed)).unwrap();
        let (m, mic) = macro_split(&f, &set).unwrap();
        let mac = lift_macro(m, &set);
        let e = set.macro_basis();
        prop_assert!((e.transpose() * &mic.coeffs).amax() <= 1e-13);
        prop_assert!(mac.coeffs.dot(&mic.coeffs).abs() <= 1e-13);
        prop_assert!((&mac.coeffs + &mic.coeffs - &f.coeffs).amax() <= 1e-14);
    }
}
