use mollow_core::floquet::{static_excited_population, static_steady_state, BlochGenerator};
use mollow_core::model::{CoherentLine, DriveConfig, EmitterParams, Frequency, FrequencyGrid};
use mollow_core::spectrum::*;
use mollow_core::Error;
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn emitter() -> EmitterParams {
    EmitterParams::reference()
}

fn correlator(drive: DriveConfig, opts: &SpectrumOptions) -> CorrelatorSeries {
    let gen = BlochGenerator::new(drive, emitter());
    let dt = opts.dtau_for(&drive, &emitter(), Frequency::from_ghz(12.0));
    two_time_correlator(&gen, opts.tau_max_for(&emitter()), dt, opts.n_phase).unwrap()
}

/// Spectrum of the unmodulated drive from the Laplace transform of the
/// regression solution, evaluated with a 3×3 solve per frequency.
fn resolvent_spectrum(drive: &DriveConfig, nu_ghz: f64) -> f64 {
    let e = emitter();
    let g = e.gamma.angular();
    let d = drive.delta.angular();
    let w = drive.rabi_l.angular();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let m = Matrix3::new(
        c(-g / 2.0, -d), c(0.0, 0.0), c(0.0, -w / 2.0),
        c(0.0, 0.0), c(-g / 2.0, d), c(0.0, w / 2.0),
        c(0.0, -w), c(0.0, w), c(-g, 0.0),
    );
    let ss = static_steady_state(drive, &e);
    let y0 = Vector3::new(c(0.0, 0.0), c(ss.excited_population(), 0.0), -ss.sp);
    let b = Vector3::new(c(0.0, 0.0), c(0.0, 0.0), c(-g, 0.0)) * ss.sp;
    let plateau = -(m.try_inverse().unwrap() * b)[1];
    let s = c(0.0, -Frequency::from_ghz(nu_ghz).angular());
    let resolvent = (Matrix3::identity() * s - m).try_inverse().unwrap();
    let y = resolvent * (y0 + b / s);
    ((y[1] - plateau / s) / std::f64::consts::PI).re
}

#[test]
fn zero_delay_value_is_mean_population() {
    let drive = DriveConfig::from_ghz(0.8, 3.53, 1.75, 3.5299).unwrap();
    let corr = correlator(drive, &SpectrumOptions::default());
    assert!(corr.values[0].im.abs() < 1e-14);
    assert!((corr.values[0].re - corr.mean_excited).abs() < 1e-9);
    for v in &corr.values {
        assert!(v.norm() <= corr.values[0].re + 1e-9);
    }
}

#[test]
fn unmodulated_spectrum_matches_resolvent() {
    for (delta, rabi) in [(0.0, 2.0), (1.3, 2.5), (-0.5, 0.3)] {
        let drive = DriveConfig::from_ghz(delta, rabi, 0.0, 3.5299).unwrap();
        let corr = correlator(drive, &SpectrumOptions::default());
        let spec = emission_spectrum(&corr, (Frequency::from_ghz(-6.0), Frequency::from_ghz(6.0)), 240).unwrap();
        let peak = spec.max_intensity();
        for (i, f) in spec.freqs().iter().enumerate() {
            let oracle = resolvent_spectrum(&drive, f.ghz());
            assert!((spec.intensity[i] - oracle).abs() < 1e-4 * peak, "Δ={delta} Ω={rabi} ν={f}: {} vs {oracle}", spec.intensity[i]);
        }
        // coherent part equals |⟨σ₋⟩|² of the stationary state
        let ss = static_steady_state(&drive, &emitter());
        assert!((spec.coherent_weight() - ss.sm.norm_sqr()).abs() < 1e-12);
    }
}

#[test]
fn resonant_correlator_envelope_rates() {
    // eigenvalues of the static Bloch matrix at Δ = 0 are −γ/2 and −3γ/4 ± iΩ'
    let drive = DriveConfig::from_ghz(0.0, 4.0, 0.0, 3.5299).unwrap();
    let gen = BlochGenerator::new(drive, emitter());
    let ev = gen.matrix(0.0).eigenvalues().unwrap();
    let g = emitter().gamma.angular();
    let w = drive.rabi_l.angular();
    let mut re: Vec<f64> = ev.iter().map(|z| z.re / g).collect();
    re.sort_by(|a, b| a.total_cmp(b));
    assert!((re[0] + 0.75).abs() < 1e-9 && (re[1] + 0.75).abs() < 1e-9 && (re[2] + 0.5).abs() < 1e-9);
    let im = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!((im - (w * w - g * g / 16.0).sqrt()).abs() < 1e-6 * w);
}

#[test]
fn mollow_triplet_positions_and_weights() {
    let drive = DriveConfig::from_ghz(0.0, 7.9, 0.0, 3.5299).unwrap();
    let corr = correlator(drive, &SpectrumOptions::default());
    let grid = corr.full_band_grid();
    let spec = emission_spectrum_on(&corr, &grid).unwrap();
    let argmax_in = |lo: f64, hi: f64| {
        let mut best = (f64::NAN, f64::MIN);
        for (f, v) in spec.freqs().iter().zip(&spec.intensity) {
            if f.ghz() > lo && f.ghz() < hi && *v > best.1 {
                best = (f.ghz(), *v);
            }
        }
        best.0
    };
    let step = grid.step.ghz();
    assert!(argmax_in(-1.0, 1.0).abs() <= step);
    assert!((argmax_in(4.0, 12.0) - 7.9).abs() <= 2.0 * step);
    assert!((argmax_in(-12.0, -4.0) + 7.9).abs() <= 2.0 * step);
    let f = Frequency::from_ghz;
    let central = spec.integrate(f(-3.95), f(3.95));
    let upper = spec.integrate(f(3.95), f(11.85));
    let lower = spec.integrate(f(-11.85), f(-3.95));
    assert!((central / upper - 2.0).abs() < 0.1);
    assert!((upper / lower - 1.0).abs() < 1e-3);
}

#[test]
fn full_band_normalization_random_drives() {
    let mut rng = StdRng::seed_from_u64(3);
    let opts = SpectrumOptions::default();
    for _ in 0..5 {
        let drive = DriveConfig::from_ghz(rng.random_range(-4.0..4.0), rng.random_range(0.1..6.0), rng.random_range(0.0..2.5), 3.5299).unwrap();
        let corr = correlator(drive, &opts);
        let spec = emission_spectrum_on(&corr, &corr.full_band_grid()).unwrap();
        let total = spec.normalization + spec.coherent_weight();
        assert!(((total - corr.mean_excited) / corr.mean_excited).abs() < 1e-3, "{drive:?}: {total} vs {}", corr.mean_excited);
        assert!(spec.min_relative > -1e-6, "{}", spec.min_relative);
    }
}

#[test]
fn static_limit_normalization_uses_closed_form_population() {
    let drive = DriveConfig::from_ghz(0.4, 1.5, 0.0, 3.5299).unwrap();
    let corr = correlator(drive, &SpectrumOptions::default());
    let spec = emission_spectrum_on(&corr, &corr.full_band_grid()).unwrap();
    let rho = static_excited_population(&drive, &emitter());
    assert!(((spec.normalization + spec.coherent_weight()) / rho - 1.0).abs() < 1e-6);
}

#[test]
fn resonant_modulated_spectrum_is_symmetric() {
    let drive = DriveConfig::from_ghz(0.0, 2.2, 1.75, 3.5299).unwrap();
    let corr = correlator(drive, &SpectrumOptions::default());
    let spec = emission_spectrum(&corr, (Frequency::from_ghz(-10.0), Frequency::from_ghz(10.0)), 401).unwrap();
    let peak = spec.max_intensity();
    let n = spec.intensity.len();
    for i in 0..n {
        assert!((spec.intensity[i] - spec.intensity[n - 1 - i]).abs() < 1e-3 * peak);
    }
}

#[test]
fn central_line_cancels_at_rabi_resonance() {
    let opts = SpectrumOptions::default();
    let g = emitter().gamma;
    let window = FrequencyGrid::linspace(-g, g, 41).unwrap();
    let base = pre_instrument_spectrum(&DriveConfig::from_ghz(0.0, 3.5299, 0.0, 3.5299).unwrap(), &emitter(), &window, &opts).unwrap();
    let mod_ = pre_instrument_spectrum(&DriveConfig::from_ghz(0.0, 3.5299, 1.75, 3.5299).unwrap(), &emitter(), &window, &opts).unwrap();
    let a = base.integrate(-g, g);
    let b = mod_.integrate(-g, g);
    assert!(b < 0.1 * a, "{b} vs {a}");
}

#[test]
fn refinement_changes_spectrum_little() {
    let drive = DriveConfig::from_ghz(0.5, 3.0, 1.75, 3.5299).unwrap();
    let grid = FrequencyGrid::linspace(Frequency::from_ghz(-8.0), Frequency::from_ghz(8.0), 161).unwrap();
    let coarse = SpectrumOptions::default();
    let dt = coarse.dtau_for(&drive, &emitter(), grid.max_abs());
    let fine = SpectrumOptions { tau_max: Some(2.0 * coarse.tau_max_for(&emitter())), dtau: Some(dt / 2.0), ..coarse };
    let a = pre_instrument_spectrum(&drive, &emitter(), &grid, &coarse).unwrap();
    let b = pre_instrument_spectrum(&drive, &emitter(), &grid, &fine).unwrap();
    let peak = a.max_intensity();
    for (x, y) in a.intensity.iter().zip(&b.intensity) {
        assert!((x - y).abs() < 1e-3 * peak);
    }
}

#[test]
fn undecayed_correlator_is_rejected() {
    let drive = DriveConfig::from_ghz(0.0, 2.0, 0.0, 3.5299).unwrap();
    let opts = SpectrumOptions { tau_max: Some(2.0 / emitter().gamma.angular()), ..Default::default() };
    let corr = correlator(drive, &opts);
    match emission_spectrum(&corr, (Frequency::from_ghz(-1.0), Frequency::from_ghz(1.0)), 11) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("tau_max")),
        other => panic!("{other:?}"),
    }
}

fn line_spectrum(grid: FrequencyGrid, centre: f64, width: f64, gaussian: bool) -> impl Fn(Frequency) -> mollow_core::Result<mollow_core::Spectrum> {
    // a stand-in emitter whose single line follows the detuning
    move |d: Frequency| {
        let hw = width / 2.0;
        let sigma = width / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
        let per_rad = 1.0 / Frequency::from_ghz(1.0).angular();
        let intensity = grid
            .points()
            .iter()
            .map(|f| {
                let x = f.ghz() - centre - d.ghz();
                let density = if gaussian {
                    (-x * x / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
                } else {
                    hw / std::f64::consts::PI / (x * x + hw * hw)
                };
                density * per_rad
            })
            .collect();
        Ok(mollow_core::Spectrum {
            grid,
            intensity,
            coherent: Vec::new(),
            drive: DriveConfig::from_ghz(d.ghz(), 1.0, 0.0, 3.5299).unwrap(),
            normalization: 0.0,
            min_relative: 0.0,
        })
    }
}

fn narrow_line_spectrum(grid: FrequencyGrid, centre: f64, width: f64) -> impl Fn(Frequency) -> mollow_core::Result<mollow_core::Spectrum> {
    line_spectrum(grid, centre, width, false)
}

fn fwhm(spec: &mollow_core::Spectrum) -> f64 {
    let peak = spec.max_intensity();
    let above: Vec<f64> = spec.freqs().iter().zip(&spec.intensity).filter(|(_, v)| **v >= peak / 2.0).map(|(f, _)| f.ghz()).collect();
    above.last().unwrap() - above.first().unwrap()
}

#[test]
fn diffusion_identity_and_gaussian_broadening() {
    let grid = FrequencyGrid::linspace(Frequency::from_ghz(-3.0), Frequency::from_ghz(3.0), 6001).unwrap();
    let f = narrow_line_spectrum(grid, 0.0, 1e-3);
    let none = InstrumentModel::none();
    let same = apply_spectral_diffusion(&f, Frequency::ZERO, &none, 21).unwrap();
    assert_eq!(same.intensity, f(Frequency::ZERO).unwrap().intensity);

    let model = InstrumentModel::reference();
    let sigma = 0.678 / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let g = line_spectrum(grid, 0.0, 0.01, true);
    let wide = apply_spectral_diffusion(&g, Frequency::ZERO, &model, 21).unwrap();
    let mass: f64 = wide.intensity.iter().sum();
    let var: f64 = wide.freqs().iter().zip(&wide.intensity).map(|(f, v)| v * f.ghz().powi(2)).sum::<f64>() / mass;
    let sigma0 = 0.01 / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    assert!((var - sigma * sigma - sigma0 * sigma0).abs() < 1e-6, "{var}");

    let g = line_spectrum(grid, 0.0, 0.2, true);
    let wide = apply_spectral_diffusion(&g, Frequency::ZERO, &model, 201).unwrap();
    let expect = (0.2f64.powi(2) + 0.678f64.powi(2)).sqrt();
    assert!((fwhm(&wide) - expect).abs() < 0.01, "{}", fwhm(&wide));
    assert!(apply_spectral_diffusion(&f, Frequency::ZERO, &model, 20).is_err());
}

#[test]
fn diffusion_quadrature_converges() {
    let drive = DriveConfig::from_ghz(0.0, 3.53, 1.75, 3.5299).unwrap();
    let grid = FrequencyGrid::linspace(Frequency::from_ghz(-10.0), Frequency::from_ghz(10.0), 201).unwrap();
    let opts = SpectrumOptions::default();
    let model = InstrumentModel::reference();
    let f = |d: Frequency| pre_instrument_spectrum(&drive.with_delta(d), &emitter(), &grid, &opts);
    let a = apply_spectral_diffusion(f, drive.delta, &model, 21).unwrap();
    let b = apply_spectral_diffusion(f, drive.delta, &model, 41).unwrap();
    let peak = b.max_intensity();
    for (x, y) in a.intensity.iter().zip(&b.intensity) {
        assert!((x - y).abs() < 1e-4 * peak);
    }
}

#[test]
fn diffusion_rejects_mismatched_grids() {
    let g1 = FrequencyGrid::linspace(Frequency::from_ghz(-1.0), Frequency::from_ghz(1.0), 11).unwrap();
    let g2 = FrequencyGrid::linspace(Frequency::from_ghz(-1.0), Frequency::from_ghz(1.0), 12).unwrap();
    let f = |d: Frequency| narrow_line_spectrum(if d.ghz() > 0.0 { g2 } else { g1 }, 0.0, 0.1)(d);
    assert!(matches!(apply_spectral_diffusion(f, Frequency::ZERO, &InstrumentModel::reference(), 5), Err(Error::Shape(_))));
}

fn delta_spectrum(grid: FrequencyGrid) -> mollow_core::Spectrum {
    mollow_core::Spectrum {
        grid,
        intensity: vec![0.0; grid.len],
        coherent: vec![CoherentLine { offset: Frequency::ZERO, weight: 0.3 }],
        drive: DriveConfig::from_ghz(0.0, 1.0, 0.0, 3.5299).unwrap(),
        normalization: 0.0,
        min_relative: 0.0,
    }
}

#[test]
fn etalon_turns_delta_into_lorentzian() {
    let model = InstrumentModel::reference();
    let grid = FrequencyGrid::periodic(Frequency::ZERO, model.etalon_fsr, 4000).unwrap();
    let out = apply_etalon(&delta_spectrum(grid), &model).unwrap();
    assert!(out.coherent.is_empty());
    assert!((fwhm(&out) - 0.525).abs() < 2.0 * grid.step.ghz());
    assert!((out.normalization - 0.3).abs() < 1e-6 * 0.3);
}

#[test]
fn etalon_preserves_integral_and_narrow_limit() {
    let model = InstrumentModel::reference();
    let grid = FrequencyGrid::periodic(Frequency::ZERO, model.etalon_fsr, 2000).unwrap();
    let spec = narrow_line_spectrum(grid, 1.5, 0.3)(Frequency::ZERO).unwrap();
    let spec = mollow_core::Spectrum { coherent: vec![CoherentLine { offset: Frequency::from_ghz(-3.5), weight: 0.01 }], ..spec };
    let before: f64 = spec.intensity.iter().sum::<f64>() * grid.step.angular() + 0.01;
    let out = apply_etalon(&spec, &model).unwrap();
    assert!(((out.normalization - before) / before).abs() < 1e-6);

    let sharp = InstrumentModel::new(Frequency::ZERO, Frequency::from_ghz(1e-7), model.etalon_fsr).unwrap();
    let spec = narrow_line_spectrum(grid, 1.5, 0.3)(Frequency::ZERO).unwrap();
    let same = apply_etalon(&spec, &sharp).unwrap();
    let peak = spec.max_intensity();
    for (a, b) in spec.intensity.iter().zip(&same.intensity) {
        assert!((a - b).abs() < 1e-5 * peak);
    }
}

#[test]
fn etalon_rejects_window_wider_than_fsr() {
    let model = InstrumentModel::reference();
    let grid = FrequencyGrid::linspace(Frequency::from_ghz(-12.0), Frequency::from_ghz(12.0), 101).unwrap();
    assert!(matches!(apply_etalon(&delta_spectrum(grid), &model), Err(Error::Aliasing { .. })));
}

#[test]
fn map_preserves_order_and_reports_failures() {
    let grid = FrequencyGrid::linspace(Frequency::from_ghz(-5.0), Frequency::from_ghz(5.0), 51).unwrap();
    let sweep: Vec<DriveConfig> = [0.5, 1.5, 2.5].iter().map(|r| DriveConfig::from_ghz(0.0, *r, 0.0, 3.5299).unwrap()).collect();
    let opts = SpectrumOptions::default();
    let out = spectrum_map(&sweep, &emitter(), &InstrumentModel::none(), &grid, &opts).unwrap();
    for (s, d) in out.iter().zip(&sweep) {
        assert_eq!(s.drive, *d);
    }
    assert!(spectrum_map(&[], &emitter(), &InstrumentModel::none(), &grid, &opts).is_err());
    let short = SpectrumOptions { tau_max: Some(1e-9), ..opts };
    match spectrum_map(&sweep, &emitter(), &InstrumentModel::none(), &grid, &short) {
        Err(Error::Sweep(items)) => assert_eq!(items.iter().map(|i| i.0).collect::<Vec<_>>(), vec![0, 1, 2]),
        other => panic!("{other:?}"),
    }
}
