use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use mollow_core::dressed::*;
use mollow_core::{DriveConfig, Frequency};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

const OMEGA_S: f64 = 3.5299;

fn cfg(delta: f64, rabi_l: f64, rabi_s: f64) -> DriveConfig {
    DriveConfig::from_ghz(delta, rabi_l, rabi_s, OMEGA_S).unwrap()
}

#[test]
fn weights_sum_to_one_and_sideband_identity() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for _ in 0..10_000 {
        let tl = rng.random_range(0.0..FRAC_PI_2);
        let ts = rng.random_range(0.0..FRAC_PI_2);
        let t = table_entries(tl, ts);
        let sum: f64 = t.iter().map(|r| r.0).sum();
        assert!((sum - 1.0).abs() < 1e-12, "{tl} {ts}: {sum}");
        let full: f64 = t.iter().map(|(w, dn)| w * dn).sum();
        let sidebands: f64 = [0, 3, 8, 11].iter().map(|&i| t[i].0 * t[i].1).sum();
        assert!((full - 2.0 * sidebands).abs() < 1e-12);
    }
}

#[test]
fn central_satellites_vanish_at_rabi_resonance() {
    for tl in [0.1, 0.4, FRAC_PI_4, 1.3] {
        let t = table_entries(tl, FRAC_PI_4);
        assert_eq!(t[4].0, 0.0);
        assert_eq!(t[7].0, 0.0);
    }
}

#[test]
fn phonon_change_cancels_at_symmetric_angles() {
    let t = table_entries(FRAC_PI_4, FRAC_PI_4);
    let row_sum: f64 = t.iter().map(|(w, dn)| w * dn).sum();
    assert!(row_sum.abs() < 1e-16);
    let pairs = t[1].0 * t[1].1 + t[2].0 * t[2].1 + t[9].0 * t[9].1 + t[10].0 * t[10].1;
    assert!((pairs + t[5].0 * t[5].1 + t[6].0 * t[6].1 + t[0].0 + t[3].0 - t[8].0 - t[11].0).abs() < 1e-16);
}

#[test]
fn phonon_change_is_antisymmetric_in_detuning() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..1000 {
        let c = cfg(rng.random_range(0.01..6.0), rng.random_range(0.01..6.0), rng.random_range(0.0..2.0));
        let m = c.with_delta(-c.delta);
        assert!((phonon_change_per_photon(&c) + phonon_change_per_photon(&m)).abs() < 1e-14);
    }
}

#[test]
fn anticrossing_gap_is_twice_the_acoustic_drive() {
    for rabi_s in [0.25, 0.75, 1.25, 1.75] {
        let (at, gap) = anticrossing_gap(&cfg(0.0, 1.0, rabi_s), Frequency::from_ghz(0.5), Frequency::from_ghz(6.0)).unwrap();
        assert!((gap.ghz() - 2.0 * rabi_s).abs() <= 1e-9 * 2.0 * rabi_s, "{rabi_s}: {gap}");
        assert!((at.ghz() - OMEGA_S).abs() < 1e-6);
    }
}

#[test]
fn detuned_gap_is_reduced_by_the_optical_angle() {
    let c = cfg(1.2, 1.0, 1.0);
    let (at, gap) = anticrossing_gap(&c, Frequency::from_ghz(0.1), Frequency::from_ghz(6.0)).unwrap();
    let s2 = (2.0 * mixing_angles(&c.with_rabi_l(at)).theta_l).sin();
    assert!(gap.ghz() >= 2.0 * s2 * 1.0 - 1e-9);
    assert!(gap.ghz() < 2.0);
}

#[test]
fn overlay_tracks_at_rabi_resonance() {
    let sweep: Vec<DriveConfig> = (0..31).map(|i| cfg(0.0, 0.2 * i as f64 + 0.1, 1.75)).collect();
    let lines = overlay_lines(&sweep).unwrap();
    for (c, l) in sweep.iter().zip(&lines) {
        let g = dressed_splitting(c).ghz();
        assert_eq!(l.len(), 9);
        assert!((l[4].frequency.ghz() - g).abs() < 1e-15 && (l[5].frequency.ghz() + g).abs() < 1e-15);
        assert_eq!(l[3].frequency, Frequency::ZERO);
        assert!((l.iter().map(|x| x.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn analytic_levels_match_diagonalization() {
    // resonant laser: no diagonal phonon shift, residual error is second order in Ω_S/ω_S
    for (rabi_l, rabi_s) in [(3.5299, 0.1), (3.0, 0.2), (4.2, 0.05)] {
        let r = eigensystem_check(&cfg(0.0, rabi_l, rabi_s), 50, 4000, 12);
        assert!(r.warnings.is_empty());
        assert!(r.splitting_deviation.abs() < r.perturbative_scale, "{r:?}");
        assert!(r.max_deviation < r.perturbative_scale);
    }
    let r = eigensystem_check(&cfg(0.0, 3.5299, 0.1), 50, 4000, 12);
    assert!((r.numeric[1] - r.numeric[0] - 0.1).abs() < 0.01 * 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn angles_stay_in_range(delta in -8.0..8.0f64, rabi_l in 0.0..8.0f64, rabi_s in 0.0..3.0f64) {
        let a = mixing_angles(&cfg(delta, rabi_l, rabi_s));
        prop_assert!((0.0..=FRAC_PI_2).contains(&a.theta_l));
        prop_assert!((0.0..=FRAC_PI_2).contains(&a.theta_s));
        let w: f64 = transition_table(&cfg(delta, rabi_l, rabi_s)).iter().map(|t| t.dipole_weight).sum();
        prop_assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_s_continuous_through_resonance(delta in -3.0..3.0f64, rabi_s in 0.05..2.0f64) {
        let rabi_l = (OMEGA_S * OMEGA_S - delta * delta).max(0.0).sqrt();
        prop_assume!(rabi_l > 0.1);
        let eps = 1e-7;
        let a = mixing_angles(&cfg(delta, rabi_l - eps, rabi_s)).theta_s;
        let b = mixing_angles(&cfg(delta, rabi_l + eps, rabi_s)).theta_s;
        prop_assert!((a - b).abs() < 1e-5);
        prop_assert!((mixing_angles(&cfg(delta, rabi_l, rabi_s)).theta_s - FRAC_PI_4).abs() < 1e-6);
    }

    #[test]
    fn splitting_never_below_coupling(delta in -6.0..6.0f64, rabi_l in 0.01..6.0f64, rabi_s in 0.0..2.0f64) {
        let c = cfg(delta, rabi_l, rabi_s);
        let s2 = (2.0 * mixing_angles(&c).theta_l).sin();
        prop_assert!(dressed_splitting(&c).ghz() >= rabi_s * s2 - 1e-15);
    }
}
