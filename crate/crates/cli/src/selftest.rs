//! Quick invariant checks of the installed solvers.

use std::f64::consts::FRAC_PI_4;

use mollow_core::cooling::{cooling_rate_closed_form, cooling_rate_from_table, lindblad_steady_state};
use mollow_core::dressed::{dressed_splitting, table_entries};
use mollow_core::fitting::{fit_lorentzian, lorentzian_dip};
use mollow_core::model::{reference, thermal_occupation};
use mollow_core::spectrum::{emission_spectrum_on, two_time_correlator};
use mollow_core::{AcousticCavity, BlochGenerator, DriveConfig, EmitterParams, Frequency, LindbladConfig, SpectrumOptions};

type Check = (&'static str, fn() -> Result<String, String>);

fn within(name: &str, value: f64, bound: f64) -> Result<String, String> {
    if value <= bound {
        Ok(format!("{name} = {value:.3e} (bound {bound:.0e})"))
    } else {
        Err(format!("{name} = {value:.3e} exceeds {bound:.0e}"))
    }
}

fn sum_rule() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        for j in 0..100 {
            let rows = table_entries(FRAC_PI_4 * (i as f64 + 0.5) / 50.0, FRAC_PI_4 * (j as f64 + 0.5) / 50.0);
            worst = worst.max((rows.iter().map(|r| r.0).sum::<f64>() - 1.0).abs());
        }
    }
    let exact = table_entries(0.3, FRAC_PI_4);
    if exact[4].0 != 0.0 || exact[7].0 != 0.0 {
        return Err("transitions 5 and 8 do not vanish at the Rabi resonance".into());
    }
    within("max |Σ weights − 1|", worst, 1e-12)
}

fn closed_form() -> Result<String, String> {
    let e = EmitterParams::reference();
    let mut worst: f64 = 0.0;
    for i in 0..40 {
        for j in 1..=40 {
            let d = DriveConfig::from_ghz(-5.0 + 0.25 * i as f64 + 0.01, 0.15 * j as f64, 1.75, reference::OMEGA_S_GHZ).map_err(|x| x.to_string())?;
            let a = cooling_rate_closed_form(&d, &e, 0.25).map_err(|x| x.to_string())?.rate;
            let b = cooling_rate_from_table(&d, &e, 0.25).rate;
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
        }
    }
    within("max relative rate difference", worst, 1e-10)
}

fn gap() -> Result<String, String> {
    let d = DriveConfig::from_ghz(0.0, reference::OMEGA_S_GHZ, 1.75, reference::OMEGA_S_GHZ).map_err(|x| x.to_string())?;
    within("|2G − 2Ω_S| / 2Ω_S at Ω_L = ω_S", (2.0 * dressed_splitting(&d).ghz() / 3.5 - 1.0).abs(), 1e-12)
}

fn thermal() -> Result<String, String> {
    let w = Frequency::from_ghz(reference::OMEGA_S_GHZ);
    let hot = thermal_occupation(w, 1.0).map_err(|x| x.to_string())?;
    let cold = thermal_occupation(w, 0.1).map_err(|x| x.to_string())?;
    if (hot - 5.4).abs() <= 0.1 && (cold - 0.2).abs() <= 0.05 {
        Ok(format!("m_th = {hot:.3} at 1 K, {cold:.4} at 0.1 K"))
    } else {
        Err(format!("m_th = {hot} at 1 K, {cold} at 0.1 K"))
    }
}

fn normalization() -> Result<String, String> {
    let e = EmitterParams::reference();
    let d = DriveConfig::from_ghz(-1.2, 2.4, 1.1, reference::OMEGA_S_GHZ).map_err(|x| x.to_string())?;
    let opts = SpectrumOptions::default();
    let gen = BlochGenerator::new(d, e);
    let corr = two_time_correlator(&gen, opts.tau_max_for(&e), opts.dtau_for(&d, &e, Frequency::from_ghz(12.0)), opts.n_phase).map_err(|x| x.to_string())?;
    let spec = emission_spectrum_on(&corr, &corr.full_band_grid()).map_err(|x| x.to_string())?;
    within("relative normalization error", ((spec.normalization + spec.coherent_weight()) / corr.mean_excited - 1.0).abs(), 1e-3)
}

fn dark_lindblad() -> Result<String, String> {
    let w = Frequency::from_ghz(reference::OMEGA_S_GHZ);
    let d = DriveConfig::new(Frequency::from_ghz(-1.0), Frequency::ZERO, Frequency::ZERO, w).map_err(|x| x.to_string())?;
    let cfg = LindbladConfig::new(EmitterParams::reference(), d, AcousticCavity::reference(), 0.1);
    let r = lindblad_steady_state(&cfg).map_err(|x| x.to_string())?;
    within("|m_ss/m_th − 1| with the laser off", (r.m_ss / r.m_th - 1.0).abs(), 1e-6)
}

fn lorentzian() -> Result<String, String> {
    let fwhm = reference::OMEGA_S_GHZ / reference::QUALITY;
    let data: Vec<(f64, f64)> = (0..401)
        .map(|i| {
            let f = reference::OMEGA_S_GHZ + fwhm * (i as f64 / 40.0 - 5.0);
            (f, lorentzian_dip(f, reference::OMEGA_S_GHZ, fwhm, 0.5, 1.0))
        })
        .collect();
    let r = fit_lorentzian(&data).map_err(|x| x.to_string())?;
    let q = r.derived.get("quality").copied().unwrap_or(f64::NAN);
    within("relative Q error on exact data", (q / reference::QUALITY - 1.0).abs(), 1e-8)
}

const CHECKS: &[Check] = &[
    ("dressed sum rule", sum_rule),
    ("closed-form rate", closed_form),
    ("anticrossing gap", gap),
    ("thermal occupation", thermal),
    ("spectrum normalization", normalization),
    ("dark master equation", dark_lindblad),
    ("cavity fit", lorentzian),
];

/// Runs every check, printing one line each; returns the number of failures.
pub fn run() -> usize {
    let mut failures = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    failures
}
