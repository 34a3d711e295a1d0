//! Cooling rate from the doubly dressed transition table.
//!
//! `R = δ_phonon · γ ρ̄_ee` with `δ_phonon = Σ δN_α |⟨f|σ_x|i⟩_α|²`, which
//! simplifies to `cos 2θ_L · sin² 2θ_S`. Positive rates add phonons
//! (blue detuning, Δ > 0); negative rates remove them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MapGrid;
use crate::dressed::{phonon_change_per_photon, transition_table};
use crate::error::{collect_indexed, Error, Result};
use crate::floquet::{default_harmonics, floquet_steady_state, BlochGenerator};
use crate::model::{DriveConfig, EmitterParams, Frequency, Spectrum};
use crate::quadrature::gaussian_nodes;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingPoint {
    pub drive: DriveConfig,
    /// Phonon number change per second; negative means cooling.
    pub rate: f64,
    /// Period-averaged excited population.
    pub rho_ee: f64,
    /// Mean phonon number change per emitted photon.
    pub delta_phonon: f64,
}

/// `(Δ/Ω_R) · Ω_L²Ω_S² / ((ω_S − Ω_R)²Ω_R² + Ω_L²Ω_S²) · γρ̄_ee`.
pub fn cooling_rate_closed_form(config: &DriveConfig, emitter: &EmitterParams, rho_ee: f64) -> Result<CoolingPoint> {
    let rabi_r = config.generalized_rabi().ghz();
    if rabi_r == 0.0 {
        return Err(Error::Domain("cooling rate undefined for Ω_R = 0".into()));
    }
    let (wl, ws, w) = (config.rabi_l.ghz(), config.rabi_s.ghz(), config.omega_s.ghz());
    let num = wl * wl * ws * ws;
    let delta_phonon = if num == 0.0 {
        0.0
    } else {
        config.delta.ghz() / rabi_r * num / ((w - rabi_r).powi(2) * rabi_r * rabi_r + num)
    };
    Ok(CoolingPoint { drive: *config, rate: delta_phonon * emitter.gamma.angular() * rho_ee, rho_ee, delta_phonon })
}

/// The same rate by summing the twelve table rows.
pub fn cooling_rate_from_table(config: &DriveConfig, emitter: &EmitterParams, rho_ee: f64) -> CoolingPoint {
    let delta_phonon = phonon_change_per_photon(config);
    CoolingPoint { drive: *config, rate: delta_phonon * emitter.gamma.angular() * rho_ee, rho_ee, delta_phonon }
}

/// Sideband intensities at `∓ω_S` and their difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandExtraction {
    /// Integrated intensity around `ω_L − ω_S`.
    pub red: f64,
    /// Integrated intensity around `ω_L + ω_S`.
    pub blue: f64,
    /// `red − blue`, proportional to the phonon rate.
    pub rate: f64,
    /// Other predicted transitions falling inside either window.
    pub warnings: Vec<String>,
}

/// Integrates the first phonon sidebands after removing a linear baseline
/// drawn between the window edges. `window` is the half width and defaults
/// to ω_S/3.
pub fn cooling_rate_from_spectrum(spec: &Spectrum, omega_s: Frequency, window: Option<Frequency>) -> Result<SidebandExtraction> {
    let hw = window.unwrap_or(omega_s / 3.0).abs();
    let (lo, hi) = (spec.grid.start.ghz(), spec.grid.last().ghz());
    let ws = omega_s.ghz();
    if lo > -ws - hw.ghz() || hi < ws + hw.ghz() {
        return Err(Error::Precondition(format!("spectrum [{lo}, {hi}] GHz does not cover ±(ω_S + window)")));
    }
    let band = |centre: f64| {
        let (a, b) = (centre - hw.ghz(), centre + hw.ghz());
        let (ya, yb) = (spec.interpolate(Frequency::from_ghz(a)), spec.interpolate(Frequency::from_ghz(b)));
        let dw = spec.grid.step.angular();
        let mut acc = 0.0;
        for (f, v) in spec.freqs().iter().zip(&spec.intensity) {
            let x = f.ghz();
            if x >= a && x <= b {
                let base = ya + (yb - ya) * (x - a) / (b - a);
                acc += (v - base) * dw;
            }
        }
        acc + spec.coherent_in(Frequency::from_ghz(a), Frequency::from_ghz(b))
    };
    let red = band(-ws);
    let blue = band(ws);

    let mut warnings = Vec::new();
    for t in transition_table(&spec.drive) {
        if matches!(t.index, 1 | 4 | 9 | 12) || t.dipole_weight < 1e-6 {
            continue;
        }
        let f = t.frequency.ghz();
        for (name, c) in [("red", -ws), ("blue", ws)] {
            if (f - c).abs() < hw.ghz() {
                warnings.push(format!("transition {} at {:.4} GHz lies inside the {name} sideband window", t.index, f));
            }
        }
    }
    Ok(SidebandExtraction { red, blue, rate: red - blue, warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingMap {
    pub grid: MapGrid,
    pub points: Vec<CoolingPoint>,
}

impl CoolingMap {
    pub fn get(&self, i_rabi: usize, i_delta: usize) -> &CoolingPoint {
        &self.points[self.grid.index(i_rabi, i_delta)]
    }
}

fn floquet_population(drive: &DriveConfig, emitter: &EmitterParams) -> Result<f64> {
    let gen = BlochGenerator::new(*drive, *emitter);
    Ok(floquet_steady_state(&gen, default_harmonics(drive), 1e-10)?.mean_excited_population())
}

/// Closed-form rate on a (Δ, Ω_L) grid, averaged over a Gaussian
/// distribution of the detuning with the given FWHM.
///
/// `template` supplies Ω_S and ω_S. The stored `rho_ee` and `delta_phonon`
/// are averaged over the same nodes.
pub fn cooling_map(grid: &MapGrid, emitter: &EmitterParams, template: &DriveConfig, diffusion_fwhm: Frequency, n_nodes: usize) -> Result<CoolingMap> {
    let nodes = if diffusion_fwhm.ghz() == 0.0 {
        vec![(Frequency::ZERO, 1.0)]
    } else {
        gaussian_nodes(diffusion_fwhm, n_nodes)?
    };
    let results: Vec<Result<CoolingPoint>> = grid
        .points()
        .par_iter()
        .map(|&(delta, rabi)| {
            let drive = template.with_delta(delta).with_rabi_l(rabi);
            drive.validate()?;
            let mut acc = CoolingPoint { drive, rate: 0.0, rho_ee: 0.0, delta_phonon: 0.0 };
            for (d, w) in &nodes {
                let shifted = drive.with_delta(delta + *d);
                let rho = floquet_population(&shifted, emitter)?;
                let p = cooling_rate_closed_form(&shifted, emitter, rho)?;
                acc.rate += w * p.rate;
                acc.rho_ee += w * p.rho_ee;
                acc.delta_phonon += w * p.delta_phonon;
            }
            Ok(acc)
        })
        .collect();
    Ok(CoolingMap { grid: grid.clone(), points: collect_indexed(results)? })
}
