mod common;

use common::dense_eigenvalues;
use proptest::prelude::*;
use siv_dicke::siv_model::*;
use siv_dicke::Error;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn draw() -> impl Strategy<Value = SivPhysicalParams> {
    (
        1.0e9..1.0e12f64,
        -5.0e11..5.0e11f64,
        -5.0e11..5.0e11f64,
        -5.0..5.0f64,
        0.0..1.0f64,
    )
        .prop_map(|(lambda, ux, uy, b0, f)| {
            SivPhysicalParams::new(lambda, ux, uy, b0, GAMMA_S, f, GAMMA_L).unwrap()
        })
}

#[test]
fn reference_splitting_is_46_ghz() {
    let p = SivPhysicalParams::reference();
    assert!((ground_splitting(&p) / TWO_PI - 46.0e9).abs() < 1.0);
    assert!((2.0 * p.upsilon() / TWO_PI - 9.539e9).abs() < 1e6);
    let e = level_energies(&p);
    assert!(((e.e3 - e.e1) / ground_splitting(&p) - 1.0).abs() < 1e-12);
}

#[test]
fn zero_jahn_teller_splitting_equals_spin_orbit() {
    let p = SivPhysicalParams::new(LAMBDA_G, 0.0, 0.0, 0.0, GAMMA_S, F_QUENCH, GAMMA_L).unwrap();
    assert_eq!(ground_splitting(&p), LAMBDA_G);
    let ev = dense_eigenvalues(&build_siv_hamiltonian(&p));
    for (got, want) in ev.iter().zip([-0.5, -0.5, 0.5, 0.5]) {
        assert!((got / LAMBDA_G - want).abs() < 1e-12);
    }
}

#[test]
fn invalid_physical_params() {
    assert!(SivPhysicalParams::new(0.0, 0.0, 0.0, 0.0, GAMMA_S, 0.1, GAMMA_L).is_err());
    assert!(SivPhysicalParams::new(LAMBDA_G, 0.0, 0.0, 0.0, -1.0, 0.1, GAMMA_L).is_err());
    assert!(SivPhysicalParams::new(LAMBDA_G, 0.0, 0.0, 0.0, GAMMA_S, 1.5, GAMMA_L).is_err());
}

#[test]
fn reference_drive_mapping() {
    // Ω/2Δ = 0.0403 and 0.2 via Ω = 2Δ·x with Δ = 1 GHz.
    let delta = 1.0e9;
    let d = DriveParams::new(2.0 * delta * 0.0403, 2.0 * delta * 0.2, delta, delta, 1.0e10).unwrap();
    let e = effective_params(&d, 1.0e3, Some(T2_100MK)).unwrap();
    let tanh_r = 0.0403 / 0.2;
    assert!((e.v / e.u - tanh_r).abs() < 1e-12);
    assert!((e.r - tanh_r.atanh()).abs() < 1e-12);
    assert!((e.u * e.u - e.v * e.v - 1.0).abs() < 1e-12);
    assert!((e.alpha.unwrap().powi(2) - (0.04 - 0.0403f64.powi(2))).abs() < 1e-15);
    assert!((e.gamma_dephase - 50.0).abs() < 1e-12);
    assert!((e.gamma_collective - e.alpha.unwrap().powi(2) * 1.0e3).abs() < 1e-9);
}

#[test]
fn single_beam_limit() {
    let d = DriveParams::new(0.0, 1.0e8, 1.0e9, 1.0e9, 1.0e10).unwrap();
    let e = effective_params(&d, 1.0, None).unwrap();
    assert_eq!((e.u, e.v, e.r, e.gamma_dephase), (1.0, 0.0, 0.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_levels_match_diagonalization(p in draw()) {
        let h = build_siv_hamiltonian(&p);
        prop_assert!((h - h.adjoint()).iter().all(|z| z.norm() <= 1e-15));
        let mut closed = level_energies(&p).as_array().to_vec();
        closed.sort_by(|a, b| a.total_cmp(b));
        let dense = dense_eigenvalues(&h);
        let scale = dense.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for (c, d) in closed.iter().zip(&dense) {
            prop_assert!((c - d).abs() <= 1e-10 * scale, "{} vs {}", c, d);
        }
        let labelled = eigensystem(&p);
        for (a, b) in labelled.energies.iter().zip(level_energies(&p).as_array()) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn splitting_is_the_zero_field_gap(lambda in 1.0e9..1.0e12f64, ux in -5.0e11..5.0e11f64, uy in -5.0e11..5.0e11f64) {
        let p = SivPhysicalParams::new(lambda, ux, uy, 0.0, GAMMA_S, F_QUENCH, GAMMA_L).unwrap();
        let ev = dense_eigenvalues(&build_siv_hamiltonian(&p));
        let gap = ev[2] - ev[0];
        prop_assert!((gap / ground_splitting(&p) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn drive_mapping_identity(x1 in 0.0..0.2f64, x2 in 0.001..0.2f64, s1 in prop::bool::ANY, s2 in prop::bool::ANY) {
        let d1: f64 = if s1 { 1.0e9 } else { -1.0e9 };
        let d2: f64 = if s2 { 2.0e9 } else { -2.0e9 };
        let d = DriveParams::new(2.0 * d1.abs() * x1, 2.0 * d2.abs() * x2, d1, d2, 1.0e10).unwrap();
        match effective_params(&d, 1.0, None) {
            Ok(e) => {
                prop_assert!(x2 * x2 > x1 * x1);
                prop_assert!((e.u * e.u - e.v * e.v - 1.0).abs() <= 1e-12 * e.u * e.u);
                prop_assert!(e.r >= 0.0 && e.u >= 1.0 && e.v >= 0.0);
            }
            Err(Error::DegenerateDrive { .. }) => prop_assert!(x2 * x2 <= x1 * x1),
            Err(other) => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn squeezing_grows_with_minor_drive(x2 in 0.05..0.2f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let r_of = |x1: f64| {
            let d = DriveParams::new(2.0e9 * x1, 2.0e9 * x2, 1.0e9, 1.0e9, 1.0e10).unwrap();
            effective_params(&d, 1.0, None).unwrap().r
        };
        let x_max = 0.999 * x2;
        prop_assert!(r_of(lo * x_max) < r_of(hi * x_max));
    }
}
