//! Resonance fluorescence spectra.
//!
//! The two-time correlator `⟨σ₊(t₀)σ₋(t₀+τ)⟩` follows from the quantum
//! regression theorem: the operator `ρ(t₀)σ₊` is evolved with the same Bloch
//! generator as the density matrix, and `Tr[σ₋ ·]` is read off. For a limit
//! cycle the result depends on `t₀`, so it is averaged over start times spread
//! evenly across one acoustic period.
//!
//! The long-τ plateau (coherent scattering) is removed before the one-sided
//! Fourier transform and reported as a comb of delta lines at `−kω_S`.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{collect_indexed, Error, Result};
use crate::floquet::{default_harmonics, evolve, floquet_steady_state, BlochGenerator, FloquetSolution};
use crate::model::{reference, CoherentLine, DriveConfig, EmitterParams, Frequency, FrequencyGrid, Spectrum};
use crate::quadrature::gaussian_nodes;

/// Period-averaged correlator on `τ_j = j·dtau`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelatorSeries {
    pub dtau: f64,
    pub values: Vec<Complex64>,
    pub drive: DriveConfig,
    /// Long-τ limit `Σ_k w_k e^{ikω_S τ}` as `(k, w_k)` pairs.
    pub plateau: Vec<(i64, Complex64)>,
    /// ω_S in rad/s.
    pub omega_s: f64,
    /// ρ̄_ee of the limit cycle.
    pub mean_excited: f64,
}

impl CorrelatorSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tau(&self, j: usize) -> f64 {
        j as f64 * self.dtau
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.tau(j)).collect()
    }

    pub fn tau_max(&self) -> f64 {
        self.tau(self.len() - 1)
    }

    pub fn plateau_at(&self, tau: f64) -> Complex64 {
        self.plateau
            .iter()
            .map(|(k, w)| w * Complex64::from_polar(1.0, (*k as f64 * self.omega_s * tau).rem_euclid(TAU)))
            .sum()
    }

    /// `|values[end] − plateau|` relative to `values[0]`.
    pub fn residual_tail(&self) -> f64 {
        let end = self.len() - 1;
        (self.values[end] - self.plateau_at(self.tau(end))).norm() / self.values[0].re.abs()
    }

    /// The coherent comb; weights are the real parts of the plateau amplitudes.
    pub fn coherent_lines(&self) -> Vec<CoherentLine> {
        let ws = Frequency::from_angular(self.omega_s);
        let mut lines: Vec<CoherentLine> = self
            .plateau
            .iter()
            .filter(|(_, w)| w.re != 0.0)
            .map(|(k, w)| CoherentLine { offset: ws * (-*k as f64), weight: w.re })
            .collect();
        lines.sort_by(|a, b| a.offset.ghz().total_cmp(&b.offset.ghz()));
        lines
    }

    /// Periodic grid covering the whole Nyquist band `[−π/dtau, π/dtau)`
    /// with one point per correlator sample.
    ///
    /// On this grid the transformed spectrum integrates to `values[0]` exactly.
    pub fn full_band_grid(&self) -> FrequencyGrid {
        let period = Frequency::from_hz(1.0 / self.dtau);
        FrequencyGrid::periodic(Frequency::ZERO, period, self.len().max(2)).expect("positive period")
    }
}

/// Resolution of the spectral pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Correlator length in seconds; `30/γ` when `None`.
    pub tau_max: Option<f64>,
    /// Correlator step in seconds; Nyquist with 4× margin when `None`.
    pub dtau: Option<f64>,
    pub n_phase: usize,
    /// Gauss–Hermite nodes of the spectral diffusion average.
    pub n_nodes: usize,
    pub ode_tol: f64,
    pub floquet_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { tau_max: None, dtau: None, n_phase: 16, n_nodes: 21, ode_tol: 1e-9, floquet_tol: 1e-10 }
    }
}

impl SpectrumOptions {
    pub fn tau_max_for(&self, emitter: &EmitterParams) -> f64 {
        self.tau_max.unwrap_or(30.0 / emitter.gamma.angular())
    }

    /// Step such that the Nyquist frequency is four times the larger of the
    /// window edge and the bandwidth of the driven dynamics.
    pub fn dtau_for(&self, drive: &DriveConfig, emitter: &EmitterParams, window: Frequency) -> f64 {
        if let Some(dt) = self.dtau {
            return dt;
        }
        let content = drive.generalized_rabi() + drive.rabi_s * 2.0 + drive.omega_s * 2.0 + emitter.gamma * 20.0;
        let w = window.abs().ghz().max(content.ghz());
        PI / (4.0 * Frequency::from_ghz(w).angular())
    }
}

/// Correlator of the limit cycle of `gen`, solved with default settings.
pub fn two_time_correlator(gen: &BlochGenerator, tau_max: f64, dtau: f64, n_phase: usize) -> Result<CorrelatorSeries> {
    let sol = floquet_steady_state(gen, default_harmonics(&gen.drive), 1e-10)?;
    two_time_correlator_from(gen, &sol, tau_max, dtau, n_phase, 1e-9)
}

/// Correlator from an already solved limit cycle.
pub fn two_time_correlator_from(
    gen: &BlochGenerator,
    sol: &FloquetSolution,
    tau_max: f64,
    dtau: f64,
    n_phase: usize,
    ode_tol: f64,
) -> Result<CorrelatorSeries> {
    if !(tau_max > 0.0) || !(dtau > 0.0) || dtau > tau_max {
        return Err(Error::Precondition(format!("need 0 < dtau ≤ tau_max, got dtau = {dtau:e}, tau_max = {tau_max:e}")));
    }
    if n_phase < 1 {
        return Err(Error::Precondition("n_phase must be at least 1".into()));
    }
    let n_tau = (tau_max / dtau).round() as usize + 1;
    let taus: Vec<f64> = (0..n_tau).map(|j| j as f64 * dtau).collect();
    let period = gen.period();
    let starts: Vec<f64> = (0..n_phase).map(|j| period * j as f64 / n_phase as f64).collect();

    let runs: Vec<Result<Vec<Complex64>>> = starts
        .par_iter()
        .map(|&t0| {
            let x = sol.state_at(t0);
            let rho_ee = x.excited_population();
            let y0 = Vector3::new(Complex64::ZERO, Complex64::from(rho_ee), -x.sp);
            let out = evolve(&gen.shifted(t0), y0, x.sp, 0.0, &taus, ode_tol)?;
            Ok(out.iter().map(|y| y[1]).collect())
        })
        .collect();
    let mut values = vec![Complex64::ZERO; n_tau];
    for run in runs {
        for (acc, v) in values.iter_mut().zip(run?) {
            *acc += v;
        }
    }
    let scale = 1.0 / n_phase as f64;
    for v in values.iter_mut() {
        *v *= scale;
    }

    let n = sol.n_harmonics as i64;
    let omega = gen.omega_s();
    let plateau = (-n..=n)
        .map(|k| {
            let a: Complex64 = starts
                .iter()
                .map(|&t| sol.state_at(t).sp * Complex64::from_polar(1.0, (k as f64 * omega * t).rem_euclid(TAU)))
                .sum::<Complex64>()
                * scale;
            (k, sol.coefficient(k)[1] * a)
        })
        .filter(|(_, w)| w.norm() > 0.0)
        .collect();

    Ok(CorrelatorSeries {
        dtau,
        values,
        drive: gen.drive,
        plateau,
        omega_s: omega,
        mean_excited: sol.mean_excited_population(),
    })
}

/// Spectrum on `n_freq` points spanning `window` (offsets from the laser).
pub fn emission_spectrum(corr: &CorrelatorSeries, window: (Frequency, Frequency), n_freq: usize) -> Result<Spectrum> {
    let grid = FrequencyGrid::linspace(window.0, window.1, n_freq)?;
    emission_spectrum_on(corr, &grid)
}

/// `S(ν) = (1/π) Re ∫₀^∞ [C(τ) − C(∞)] e^{iντ} dτ` by the trapezoid rule.
pub fn emission_spectrum_on(corr: &CorrelatorSeries, grid: &FrequencyGrid) -> Result<Spectrum> {
    if corr.len() < 2 {
        return Err(Error::Precondition("correlator needs at least two samples".into()));
    }
    let tail = corr.residual_tail();
    if !(tail < 1e-4) {
        return Err(Error::Precondition(format!(
            "correlator has not decayed (tail {tail:.2e} of the τ = 0 value); increase tau_max beyond {:.3e} s",
            corr.tau_max()
        )));
    }
    let h = corr.dtau;
    let last = corr.len() - 1;
    let c: Vec<Complex64> = (0..corr.len())
        .map(|j| {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            (corr.values[j] - corr.plateau_at(corr.tau(j))) * w
        })
        .collect();
    let intensity: Vec<f64> = (0..grid.len)
        .into_par_iter()
        .map(|i| {
            let nu = grid.get(i).angular();
            let step = Complex64::from_polar(1.0, (nu * h).rem_euclid(TAU));
            let mut z = Complex64::from(1.0);
            let mut acc = Complex64::ZERO;
            for (j, cj) in c.iter().enumerate() {
                // re-anchor the phasor to stop round-off from accumulating
                if j % 512 == 0 {
                    z = Complex64::from_polar(1.0, (nu * h * j as f64).rem_euclid(TAU));
                }
                acc += cj * z;
                z *= step;
            }
            h / PI * acc.re
        })
        .collect();
    Ok(Spectrum::new(*grid, intensity, corr.coherent_lines(), corr.drive))
}

/// Broadening applied after the emission spectrum is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstrumentModel {
    /// Gaussian FWHM of the detuning distribution.
    pub diffusion_fwhm: Frequency,
    pub etalon_fwhm: Frequency,
    pub etalon_fsr: Frequency,
}

impl InstrumentModel {
    pub fn new(diffusion_fwhm: Frequency, etalon_fwhm: Frequency, etalon_fsr: Frequency) -> Result<Self> {
        let m = InstrumentModel { diffusion_fwhm, etalon_fwhm, etalon_fsr };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("diffusion_fwhm", self.diffusion_fwhm), ("etalon_fwhm", self.etalon_fwhm), ("etalon_fsr", self.etalon_fsr)] {
            if !f.is_finite() || f.ghz() < 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and non-negative, got {f}")));
            }
        }
        if !(self.etalon_fsr.ghz() > self.etalon_fwhm.ghz()) {
            return Err(Error::Domain("etalon free spectral range must exceed its linewidth".into()));
        }
        Ok(())
    }

    /// Spectral diffusion and etalon of the reference experiment.
    pub fn reference() -> Self {
        InstrumentModel {
            diffusion_fwhm: Frequency::from_ghz(reference::GAMMA_INH_GHZ),
            etalon_fwhm: Frequency::from_ghz(reference::ETALON_FWHM_GHZ),
            etalon_fsr: Frequency::from_ghz(reference::ETALON_FSR_GHZ),
        }
    }

    /// No broadening at all.
    pub fn none() -> Self {
        InstrumentModel {
            diffusion_fwhm: Frequency::ZERO,
            etalon_fwhm: Frequency::ZERO,
            etalon_fsr: Frequency::from_ghz(reference::ETALON_FSR_GHZ),
        }
    }
}

fn merge_lines(mut lines: Vec<CoherentLine>) -> Vec<CoherentLine> {
    lines.sort_by(|a, b| a.offset.ghz().total_cmp(&b.offset.ghz()));
    let mut out: Vec<CoherentLine> = Vec::with_capacity(lines.len());
    for l in lines {
        match out.last_mut() {
            Some(prev) if (prev.offset.ghz() - l.offset.ghz()).abs() <= 1e-9 * (1.0 + l.offset.ghz().abs()) => prev.weight += l.weight,
            _ => out.push(l),
        }
    }
    out
}

/// Average of `spectra_fn(Δ₀ + δ)` over a Gaussian distribution of `δ`.
pub fn apply_spectral_diffusion<F>(spectra_fn: F, delta0: Frequency, model: &InstrumentModel, n_nodes: usize) -> Result<Spectrum>
where
    F: Fn(Frequency) -> Result<Spectrum> + Sync,
{
    let nodes = gaussian_nodes(model.diffusion_fwhm, n_nodes)?;
    if model.diffusion_fwhm.ghz() == 0.0 {
        return spectra_fn(delta0);
    }
    let spectra = collect_indexed(nodes.par_iter().map(|(d, _)| spectra_fn(delta0 + *d)).collect())?;
    let grid = spectra[0].grid;
    if let Some(bad) = spectra.iter().position(|s| s.grid != grid) {
        return Err(Error::Shape(format!("spectrum at node {bad} lives on a different grid")));
    }
    let mut intensity = vec![0.0; grid.len];
    let mut lines = Vec::new();
    for ((_, w), s) in nodes.iter().zip(&spectra) {
        for (acc, v) in intensity.iter_mut().zip(&s.intensity) {
            *acc += w * v;
        }
        lines.extend(s.coherent.iter().map(|l| CoherentLine { offset: l.offset, weight: w * l.weight }));
    }
    let centre = &spectra[nodes.len() / 2];
    let mut out = Spectrum::new(grid, intensity, merge_lines(lines), centre.drive.with_delta(delta0));
    out.min_relative = spectra.iter().map(|s| s.min_relative).fold(out.min_relative, f64::min);
    Ok(out)
}

/// Cumulative distribution of a Lorentzian of half width `a` wrapped onto a
/// period `l`, counted from zero and continued across periods.
fn wrapped_lorentzian_cdf(x: f64, a: f64, l: f64) -> f64 {
    let n = ((x + l / 2.0) / l).floor();
    let xr = x - n * l;
    let c = 1.0 / (PI * a / l).tanh();
    n + (c * (PI * xr / l).tan()).atan() / PI
}

/// Convolution with the etalon transmission, a unit-area Lorentzian repeated
/// every free spectral range. Coherent lines are folded into the result.
pub fn apply_etalon(spec: &Spectrum, model: &InstrumentModel) -> Result<Spectrum> {
    model.validate()?;
    if model.etalon_fwhm.ghz() == 0.0 {
        return Ok(spec.clone());
    }
    let span = spec.grid.span().ghz();
    let fsr = model.etalon_fsr.ghz();
    if span > fsr {
        return Err(Error::Aliasing { window_ghz: span, fsr_ghz: fsr });
    }
    let a = model.etalon_fwhm.ghz() / 2.0;
    let h = spec.grid.step.ghz();
    let m = spec.grid.len;
    let cell = |x: f64| wrapped_lorentzian_cdf(x + h / 2.0, a, fsr) - wrapped_lorentzian_cdf(x - h / 2.0, a, fsr);
    let kernel: Vec<f64> = (0..2 * m - 1).map(|d| cell(h * (d as f64 - (m - 1) as f64))).collect();
    let dw = spec.grid.step.angular();
    let intensity: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (j, s) in spec.intensity.iter().enumerate() {
                acc += s * kernel[i + m - 1 - j];
            }
            let f = spec.grid.get(i).ghz();
            for l in &spec.coherent {
                acc += l.weight * cell(f - l.offset.ghz()) / dw;
            }
            acc
        })
        .collect();
    let mut out = Spectrum::new(spec.grid, intensity, Vec::new(), spec.drive);
    out.min_relative = out.min_relative.min(spec.min_relative);
    Ok(out)
}

/// Emission spectrum of one drive before any broadening.
pub fn pre_instrument_spectrum(drive: &DriveConfig, emitter: &EmitterParams, grid: &FrequencyGrid, opts: &SpectrumOptions) -> Result<Spectrum> {
    let gen = BlochGenerator::new(*drive, *emitter);
    let sol = floquet_steady_state(&gen, default_harmonics(drive), opts.floquet_tol)?;
    let window = grid.max_abs();
    let corr = two_time_correlator_from(&gen, &sol, opts.tau_max_for(emitter), opts.dtau_for(drive, emitter, window), opts.n_phase, opts.ode_tol)?;
    emission_spectrum_on(&corr, grid)
}

/// Full pipeline for one drive: emission, spectral diffusion, etalon.
pub fn instrument_spectrum(drive: &DriveConfig, emitter: &EmitterParams, model: &InstrumentModel, grid: &FrequencyGrid, opts: &SpectrumOptions) -> Result<Spectrum> {
    model.validate()?;
    if model.etalon_fwhm.ghz() > 0.0 && grid.span().ghz() > model.etalon_fsr.ghz() {
        return Err(Error::Aliasing { window_ghz: grid.span().ghz(), fsr_ghz: model.etalon_fsr.ghz() });
    }
    let diffused = apply_spectral_diffusion(
        |d| pre_instrument_spectrum(&drive.with_delta(d), emitter, grid, opts),
        drive.delta,
        model,
        opts.n_nodes,
    )?;
    apply_etalon(&diffused, model)
}

/// [`instrument_spectrum`] for every drive of a sweep, in input order.
pub fn spectrum_map(sweep: &[DriveConfig], emitter: &EmitterParams, model: &InstrumentModel, grid: &FrequencyGrid, opts: &SpectrumOptions) -> Result<Vec<Spectrum>> {
    if sweep.is_empty() {
        return Err(Error::Precondition("empty sweep".into()));
    }
    collect_indexed(sweep.par_iter().map(|d| instrument_spectrum(d, emitter, model, grid, opts)).collect())
}
