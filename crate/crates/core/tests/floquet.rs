use mollow_core::floquet::*;
use mollow_core::{DriveConfig, EmitterParams};
use proptest::prelude::*;

fn drive(d: f64, l: f64, s: f64) -> DriveConfig {
    DriveConfig::from_ghz(d, l, s, 3.5299).unwrap()
}

#[test]
fn transient_settles_onto_the_limit_cycle() {
    let e = EmitterParams::reference();
    for (d, l, s) in [(-2.36, 2.625, 1.75), (1.0, 0.8, 0.6), (0.0, 4.0, 2.5)] {
        let gen = BlochGenerator::new(drive(d, l, s), e);
        let sol = floquet_steady_state(&gen, default_harmonics(&drive(d, l, s)), 1e-10).unwrap();
        let t0 = 40.0 / gen.gamma();
        let samples: Vec<f64> = (0..16).map(|k| t0 + gen.period() * k as f64 / 16.0).collect();
        let states = propagate_at(&gen, BlochState::ground(), 0.0, &samples, 1e-11).unwrap();
        for (t, s) in samples.iter().zip(&states) {
            let f = sol.state_at(*t);
            let err = (s.to_vector() - f.to_vector()).norm();
            assert!(err < 1e-7, "{d} {l}: {err}");
        }
    }
}


#[test]
fn monodromy_determinant_is_the_damping_volume() {
    let gen = BlochGenerator::new(drive(-1.0, 2.0, 1.0), EmitterParams::reference());
    let m = monodromy(&gen, 1e-12).unwrap();
    let expected = (-2.0 * gen.gamma() * gen.period()).exp();
    assert!((m.determinant().norm() / expected - 1.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monodromy_is_contracting(d in -5.0..5.0f64, l in 0.0..5.0f64, s in 0.0..3.0f64) {
        let gen = BlochGenerator::new(drive(d, l, s), EmitterParams::reference());
        let r = spectral_radius(&monodromy(&gen, 1e-10).unwrap());
        prop_assert!(r < 1.0);
        prop_assert!(r <= (-0.5 * gen.gamma() * gen.period()).exp() * (1.0 + 1e-6));
    }

    #[test]
    fn limit_cycle_is_a_physical_state(d in -5.0..5.0f64, l in 0.05..5.0f64, s in 0.0..3.0f64) {
        let dr = drive(d, l, s);
        let gen = BlochGenerator::new(dr, EmitterParams::reference());
        let sol = floquet_steady_state(&gen, default_harmonics(&dr), 1e-10).unwrap();
        let p = sol.mean_excited_population();
        prop_assert!(p > 0.0 && p < 0.5);
        for k in 0..8 {
            let t = gen.period() * k as f64 / 8.0;
            let st = sol.state_at(t);
            prop_assert!(st.bloch_radius_squared() <= 1.0 + 1e-9);
            prop_assert!(st.conjugation_defect() < 1e-9);
            prop_assert!((sol.vector_at(t) - sol.vector_at(t + gen.period())).norm() < 1e-12);
        }
    }
}
