use kinshock_wasm::{maxwellian_report, profile_report, rh_points};

#[test]
fn profile_connects_the_endpoints() {
    let r = profile_report(0.05, 0.135386, 0.380772, 0.5, 401).unwrap();
    assert_eq!(r.x.len(), 401);
    assert_eq!(r.rho.len(), 401);
    assert!(r.ode_residual <= 1e-8);
    assert!((r.rho[0] - 1.0).abs() <= 1e-6);
    assert!(r.rho[400] < r.rho[0]);
    assert!(r.center_slope > 0.0);
}

#[test]
fn profile_rejects_bad_input() {
    assert!(profile_report(0.05, -1.0, 0.38, 0.5, 401).is_err());
    assert!(profile_report(0.5, 0.135, 0.38, 0.5, 401).is_err());
    assert!(profile_report(0.05, 0.135, 0.38, 0.5, 400).is_err());
}

#[test]
fn rh_curve_is_ordered() {
    let pts = rh_points(0.1, 10).unwrap();
    assert_eq!(pts.len(), 10);
    assert!((pts[9].epsilon - 0.1).abs() < 1e-15);
    assert!(pts.windows(2).all(|w| w[1].rho_plus < w[0].rho_plus && w[1].speed < w[0].speed));
    assert!(pts.iter().all(|p| p.residual <= 1e-12));
    assert!(rh_points(0.1, 1).is_err());
}

#[test]
fn maxwellian_coefficients_of_the_reference_state() {
    let c = maxwellian_report(1.0, 0.0, 1.0, 4).unwrap();
    let total: f64 = c.iter().map(|k| k.value.abs()).sum();
    let first = c.iter().find(|k| k.index == [0, 0, 0]).unwrap();
    assert!((first.value - 1.0).abs() < 1e-15 && (total - 1.0).abs() < 1e-14);

    let shifted = maxwellian_report(2.0, 0.5, 1.0, 4).unwrap();
    let u1 = shifted.iter().find(|k| k.index == [1, 0, 0]).unwrap();
    assert!((u1.value - 1.0).abs() < 1e-14);
    assert!(maxwellian_report(1.0, 0.0, -1.0, 3).is_err());
    assert!(maxwellian_report(1.0, 0.0, 1.0, 13).is_err());
}
