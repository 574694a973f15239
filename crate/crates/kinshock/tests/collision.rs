mod common;

use common::{tensor, GAMMA, KAPPA, S};
use kinshock::collision::{
    apply_q, discretized_maxwellian, linearized_matrix, load_tensor, save_tensor, spectral_gap, CacheError,
    KernelParams, CACHE_MAGIC,
};
use kinshock::hermite::{macro_coords, MacroState, SpectralVector};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> SpectralVector {
    SpectralVector {
        degree: 3,
        coeffs: DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
    }
}

#[test]
fn collisions_conserve_mass_momentum_and_energy() {
    let t = tensor(3);
    let set = t.index_set();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kappa in [0.0, KAPPA, 1.0] {
        for _ in 0..10 {
            let g = random_vector(&mut rng, t.dim());
            let f = random_vector(&mut rng, t.dim());
            let q = apply_q(&t, kappa, &g, &f).unwrap();
            let m = macro_coords(&q.coeffs, &set);
            let scale = q.coeffs.amax().max(1.0);
            assert!(m.a.iter().all(|x| x.abs() <= 1e-11 * scale), "kappa {kappa}: {:?}", m.a);
        }
    }
}

#[test]
fn reference_maxwellian_is_an_equilibrium() {
    let t = tensor(3);
    let m = SpectralVector::reference_maxwellian(&t.index_set());
    for kappa in [0.0, 0.1] {
        assert!(apply_q(&t, kappa, &m, &m).unwrap().coeffs.amax() <= 1e-12);
    }
    let d = discretized_maxwellian(&t, KAPPA, MacroState::REFERENCE).unwrap();
    assert_eq!(d.iterations, 0);
    assert!((&d.coeffs.coeffs - &m.coeffs).amax() <= 1e-14);
}

#[test]
fn discretized_maxwellian_off_reference() {
    let t = tensor(3);
    let target = MacroState::new(1.1, 0.05, -0.02);
    let d = discretized_maxwellian(&t, KAPPA, target).unwrap();
    let got = macro_coords(&d.coeffs.coeffs, &t.index_set());
    for k in 0..3 {
        assert!((got.a[k] - target.a[k]).abs() <= 1e-12);
    }
    assert!(d.newton_residual <= 1e-11);
    let q = apply_q(&t, KAPPA, &d.coeffs, &d.coeffs).unwrap();
    assert!(q.coeffs.amax() <= 1e-10);
}

#[test]
fn lift_enters_linearly_and_matches_the_linearization() {
    let t = tensor(3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = random_vector(&mut rng, t.dim());
    let f = random_vector(&mut rng, t.dim());
    let q0 = apply_q(&t, 0.0, &g, &f).unwrap().coeffs;
    let q1 = apply_q(&t, 0.1, &g, &f).unwrap().coeffs;
    let lift = t.lift.apply(&g.coeffs, &f.coeffs);
    assert_eq!(q0, t.main.apply(&g.coeffs, &f.coeffs));
    assert!((&q1 - &q0 - lift * 0.1).amax() <= 1e-13);

    let l = linearized_matrix(&t, KAPPA, &g).unwrap();
    let direct = apply_q(&t, KAPPA, &g, &f).unwrap().coeffs + apply_q(&t, KAPPA, &f, &g).unwrap().coeffs;
    assert!((&l * &f.coeffs - direct).amax() <= 1e-12);
}

#[test]
fn polarization_identity() {
    let t = tensor(3);
    let form = t.form(KAPPA);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_vector(&mut rng, t.dim()).coeffs;
    let g = random_vector(&mut rng, t.dim()).coeffs;
    let lhs = form.apply(&f, &f) - form.apply(&g, &g);
    let (d, s) = (&f - &g, &f + &g);
    let rhs = (form.apply(&d, &s) + form.apply(&s, &d)) * 0.5;
    assert!((lhs - rhs).amax() <= 1e-12);
}

#[test]
fn lift_only_adds_dissipation() {
    let t = tensor(3);
    let set = t.index_set();
    let m = SpectralVector::reference_maxwellian(&set);
    let mut previous = f64::INFINITY;
    for kappa in [0.0, 0.05, 0.1] {
        let gap = spectral_gap(&linearized_matrix(&t, kappa, &m).unwrap(), &set, None).unwrap();
        let most_negative = gap.micro_eigenvalues[0];
        assert!(gap.delta0 > 0.0);
        assert!(most_negative <= previous + 1e-12, "kappa {kappa}: {most_negative} > {previous}");
        previous = most_negative;
    }
}

#[test]
fn cache_round_trip_and_rejections() {
    let t = tensor(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.kshk");
    save_tensor(&t, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], CACHE_MAGIC);
    assert_eq!(load_tensor(&path, Some((3, GAMMA, S, t.quad))).unwrap(), t);

    assert!(matches!(
        load_tensor(&path, Some((3, 0.4, S, t.quad))),
        Err(CacheError::ParamMismatch(_))
    ));
    assert!(matches!(
        load_tensor(&path, Some((4, GAMMA, S, t.quad))),
        Err(CacheError::ParamMismatch(_))
    ));

    let mut flipped = bytes.clone();
    let k = bytes.len() / 2;
    flipped[k] ^= 0x40;
    std::fs::write(&path, &flipped).unwrap();
    assert!(matches!(load_tensor(&path, None), Err(CacheError::Checksum)));

    std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
    assert!(matches!(load_tensor(&path, None), Err(CacheError::Truncated { .. })));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    std::fs::write(&path, &magic).unwrap();
    assert!(matches!(load_tensor(&path, None), Err(CacheError::BadMagic)));
}

#[test]
fn kernel_parameter_ranges() {
    assert!(KernelParams::new(1.0, 0.25, 0.0).is_err());
    assert!(KernelParams::new(0.5, 0.5, 0.0).is_err());
    assert!(KernelParams::new(0.5, 0.25, -0.1).is_err());
    let p = KernelParams::power_law(10.0, 0.0).unwrap();
    assert!((p.s - 1.0 / 9.0).abs() < 1e-15 && (p.gamma - 5.0 / 9.0).abs() < 1e-15);
}
