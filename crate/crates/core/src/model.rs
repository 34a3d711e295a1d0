//! Domain types shared by every solver.
//!
//! Frequencies are quoted in cycles (`ω/2π`, usually in GHz) at every
//! boundary and converted to angular frequency (rad/s) for computation.
//! Times are in seconds.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (CODATA 2018, exact in SI), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (CODATA 2018, exact in SI), J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Device constants of the reference experiment.
pub mod reference {
    /// Spontaneous emission rate γ/2π.
    pub const GAMMA_GHZ: f64 = 0.134;
    /// Inhomogeneous (spectral diffusion) FWHM Γ/2π.
    pub const GAMMA_INH_GHZ: f64 = 0.678;
    /// Acoustic cavity resonance ω_S/2π.
    pub const OMEGA_S_GHZ: f64 = 3.5299;
    /// Acoustic cavity quality factor.
    pub const QUALITY: f64 = 12_562.0;
    /// Single-phonon coupling g₀/2π.
    pub const G0_GHZ: f64 = 1.2e-3;
    /// Scanning etalon linewidth.
    pub const ETALON_FWHM_GHZ: f64 = 0.525;
    /// Scanning etalon free spectral range.
    pub const ETALON_FSR_GHZ: f64 = 20.0;
    /// Acoustic driving strength used for the modulated spectra.
    pub const RABI_S_GHZ: f64 = 1.75;
}

/// A frequency stored in cycles (GHz).
///
/// `Frequency::from_ghz(f.ghz()) == f` holds bit for bit; the angular value
/// is `2π · 10⁹ · ghz`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub const ZERO: Frequency = Frequency(0.0);

    pub fn from_ghz(ghz: f64) -> Self {
        Frequency(ghz)
    }

    pub fn from_mhz(mhz: f64) -> Self {
        Frequency(mhz * 1e-3)
    }

    pub fn from_hz(hz: f64) -> Self {
        Frequency(hz * 1e-9)
    }

    /// From an angular frequency in rad/s.
    pub fn from_angular(rad_per_s: f64) -> Self {
        Frequency(rad_per_s / (TAU * 1e9))
    }

    pub fn ghz(self) -> f64 {
        self.0
    }

    pub fn mhz(self) -> f64 {
        self.0 * 1e3
    }

    pub fn hz(self) -> f64 {
        self.0 * 1e9
    }

    /// Angular frequency in rad/s.
    pub fn angular(self) -> f64 {
        self.0 * (TAU * 1e9)
    }

    pub fn abs(self) -> Self {
        Frequency(self.0.abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} GHz", self.0)
    }
}

impl Add for Frequency {
    type Output = Frequency;
    fn add(self, rhs: Frequency) -> Frequency {
        Frequency(self.0 + rhs.0)
    }
}

impl Sub for Frequency {
    type Output = Frequency;
    fn sub(self, rhs: Frequency) -> Frequency {
        Frequency(self.0 - rhs.0)
    }
}

impl Neg for Frequency {
    type Output = Frequency;
    fn neg(self) -> Frequency {
        Frequency(-self.0)
    }
}

impl Mul<f64> for Frequency {
    type Output = Frequency;
    fn mul(self, rhs: f64) -> Frequency {
        Frequency(self.0 * rhs)
    }
}

impl Div<f64> for Frequency {
    type Output = Frequency;
    fn div(self, rhs: f64) -> Frequency {
        Frequency(self.0 / rhs)
    }
}

fn require_finite(name: &str, f: Frequency) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {}", f.ghz())))
    }
}

/// Two-level emitter constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Spontaneous emission rate γ.
    pub gamma: Frequency,
    /// Inhomogeneous FWHM Γ from spectral diffusion.
    pub gamma_inh: Frequency,
    /// Bare transition frequency, only used as an absolute reference.
    pub omega0: Option<Frequency>,
}

impl EmitterParams {
    pub fn new(gamma: Frequency, gamma_inh: Frequency) -> Result<Self> {
        require_finite("gamma", gamma)?;
        require_finite("gamma_inh", gamma_inh)?;
        if gamma.ghz() <= 0.0 {
            return Err(Error::Domain("gamma must be positive".into()));
        }
        if gamma_inh.ghz() < 0.0 {
            return Err(Error::Domain("gamma_inh must be non-negative".into()));
        }
        Ok(EmitterParams { gamma, gamma_inh, omega0: None })
    }

    /// The quantum dot of the reference experiment.
    pub fn reference() -> Self {
        EmitterParams {
            gamma: Frequency::from_ghz(reference::GAMMA_GHZ),
            gamma_inh: Frequency::from_ghz(reference::GAMMA_INH_GHZ),
            omega0: None,
        }
    }
}

/// Optical and acoustic drive of the emitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Laser detuning Δ = ω_L − ω₀.
    pub delta: Frequency,
    /// Optical Rabi frequency Ω_L.
    pub rabi_l: Frequency,
    /// Acoustic driving strength Ω_S.
    pub rabi_s: Frequency,
    /// Acoustic frequency ω_S.
    pub omega_s: Frequency,
    /// Absolute laser frequency, when known.
    pub omega_l: Option<Frequency>,
}

impl DriveConfig {
    pub fn new(delta: Frequency, rabi_l: Frequency, rabi_s: Frequency, omega_s: Frequency) -> Result<Self> {
        let cfg = DriveConfig { delta, rabi_l, rabi_s, omega_s, omega_l: None };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Convenience constructor with every frequency in GHz.
    pub fn from_ghz(delta: f64, rabi_l: f64, rabi_s: f64, omega_s: f64) -> Result<Self> {
        Self::new(
            Frequency::from_ghz(delta),
            Frequency::from_ghz(rabi_l),
            Frequency::from_ghz(rabi_s),
            Frequency::from_ghz(omega_s),
        )
    }

    pub fn validate(&self) -> Result<()> {
        require_finite("delta", self.delta)?;
        require_finite("rabi_l", self.rabi_l)?;
        require_finite("rabi_s", self.rabi_s)?;
        require_finite("omega_s", self.omega_s)?;
        if self.rabi_l.ghz() < 0.0 {
            return Err(Error::Domain("optical Rabi frequency must be non-negative".into()));
        }
        if self.rabi_s.ghz() < 0.0 {
            return Err(Error::Domain("acoustic driving strength must be non-negative".into()));
        }
        if self.omega_s.ghz() <= 0.0 {
            return Err(Error::Domain("acoustic frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn with_delta(mut self, delta: Frequency) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_rabi_l(mut self, rabi_l: Frequency) -> Self {
        self.rabi_l = rabi_l;
        self
    }

    pub fn with_rabi_s(mut self, rabi_s: Frequency) -> Self {
        self.rabi_s = rabi_s;
        self
    }

    /// Ω_R = √(Ω_L² + Δ²).
    pub fn generalized_rabi(&self) -> Frequency {
        generalized_rabi(self)
    }

    /// Acoustic period 2π/ω_S in seconds.
    pub fn acoustic_period(&self) -> f64 {
        TAU / self.omega_s.angular()
    }
}

/// Ω_R = √(Ω_L² + Δ²).
pub fn generalized_rabi(config: &DriveConfig) -> Frequency {
    Frequency::from_ghz(config.rabi_l.ghz().hypot(config.delta.ghz()))
}

/// Surface acoustic wave cavity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcousticCavity {
    pub omega_s: Frequency,
    pub quality: f64,
    /// Single-phonon coupling g₀.
    pub g0: Frequency,
}

impl AcousticCavity {
    pub fn new(omega_s: Frequency, quality: f64, g0: Frequency) -> Result<Self> {
        require_finite("omega_s", omega_s)?;
        require_finite("g0", g0)?;
        if omega_s.ghz() <= 0.0 {
            return Err(Error::Domain("cavity frequency must be positive".into()));
        }
        if !(quality > 0.0 && quality.is_finite()) {
            return Err(Error::Domain("quality factor must be positive".into()));
        }
        Ok(AcousticCavity { omega_s, quality, g0 })
    }

    pub fn reference() -> Self {
        AcousticCavity {
            omega_s: Frequency::from_ghz(reference::OMEGA_S_GHZ),
            quality: reference::QUALITY,
            g0: Frequency::from_ghz(reference::G0_GHZ),
        }
    }

    /// γ_S = ω_S / Q_S.
    pub fn dissipation(&self) -> Frequency {
        self.omega_s / self.quality
    }
}

/// Bose–Einstein occupation 1/(exp(ħω_S/k_B T) − 1) of a mode at `omega_s`.
pub fn thermal_occupation(omega_s: Frequency, temperature: f64) -> Result<f64> {
    if !(omega_s.ghz() > 0.0) || !omega_s.is_finite() {
        return Err(Error::Domain(format!("mode frequency must be positive, got {omega_s}")));
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature} K")));
    }
    let x = HBAR * omega_s.angular() / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Uniform frequency grid, offsets relative to the laser frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: Frequency,
    pub step: Frequency,
    pub len: usize,
}

impl FrequencyGrid {
    /// `n` points from `lo` to `hi` inclusive.
    pub fn linspace(lo: Frequency, hi: Frequency, n: usize) -> Result<Self> {
        if n < 2 || !(hi.ghz() > lo.ghz()) {
            return Err(Error::Domain(format!("invalid grid [{lo}, {hi}] with {n} points")));
        }
        Ok(FrequencyGrid { start: lo, step: (hi - lo) / (n - 1) as f64, len: n })
    }

    /// `n` points covering one period `[center − period/2, center + period/2)`.
    pub fn periodic(center: Frequency, period: Frequency, n: usize) -> Result<Self> {
        if n < 2 || !(period.ghz() > 0.0) {
            return Err(Error::Domain(format!("invalid periodic grid of period {period} with {n} points")));
        }
        Ok(FrequencyGrid { start: center - period / 2.0, step: period / n as f64, len: n })
    }

    pub fn get(&self, i: usize) -> Frequency {
        self.start + self.step * i as f64
    }

    pub fn last(&self) -> Frequency {
        self.get(self.len - 1)
    }

    pub fn points(&self) -> Vec<Frequency> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Largest |offset| on the grid.
    pub fn max_abs(&self) -> Frequency {
        self.start.abs().max_by(self.last().abs())
    }

    /// Distance between the first and last point.
    pub fn span(&self) -> Frequency {
        self.step * (self.len - 1) as f64
    }
}

impl Frequency {
    fn max_by(self, other: Frequency) -> Frequency {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

/// A delta-function component of a spectrum (coherent scattering).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentLine {
    /// Offset from the laser frequency.
    pub offset: Frequency,
    /// Integrated weight, in the same units as the integral of the intensity.
    pub weight: f64,
}

/// Emission spectrum on a uniform grid of offsets from the laser frequency.
///
/// `intensity` is a density per unit angular frequency (s), so that its
/// integral over rad/s plus the coherent weights equals the mean excited
/// population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub intensity: Vec<f64>,
    pub coherent: Vec<CoherentLine>,
    pub drive: DriveConfig,
    /// Riemann-sum integral of `intensity` over angular frequency.
    pub normalization: f64,
    /// Smallest sample before clipping, relative to the maximum.
    pub min_relative: f64,
}

impl Spectrum {
    pub(crate) fn new(grid: FrequencyGrid, mut intensity: Vec<f64>, coherent: Vec<CoherentLine>, drive: DriveConfig) -> Self {
        let max = intensity.iter().cloned().fold(0.0_f64, f64::max);
        let min = intensity.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_relative = if max > 0.0 { min / max } else { 0.0 };
        let floor = -1e-9 * max;
        for v in intensity.iter_mut() {
            if *v < floor {
                *v = floor;
            }
        }
        let normalization = intensity.iter().sum::<f64>() * grid.step.angular();
        Spectrum { grid, intensity, coherent, drive, normalization, min_relative }
    }

    pub fn freqs(&self) -> Vec<Frequency> {
        self.grid.points()
    }

    pub fn coherent_weight(&self) -> f64 {
        self.coherent.iter().map(|l| l.weight).sum()
    }

    pub fn max_intensity(&self) -> f64 {
        self.intensity.iter().cloned().fold(0.0, f64::max)
    }

    /// Integral of the continuous part over `[lo, hi]`, cells counted by center.
    pub fn integrate(&self, lo: Frequency, hi: Frequency) -> f64 {
        let dw = self.grid.step.angular();
        self.intensity
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let f = self.grid.get(*i).ghz();
                f >= lo.ghz() && f <= hi.ghz()
            })
            .map(|(_, v)| v * dw)
            .sum()
    }

    /// Coherent weight of the lines inside `[lo, hi]`.
    pub fn coherent_in(&self, lo: Frequency, hi: Frequency) -> f64 {
        self.coherent
            .iter()
            .filter(|l| l.offset.ghz() >= lo.ghz() && l.offset.ghz() <= hi.ghz())
            .map(|l| l.weight)
            .sum()
    }

    /// Linear interpolation of the continuous part at `f`; zero outside the grid.
    pub fn interpolate(&self, f: Frequency) -> f64 {
        let x = (f - self.grid.start).ghz() / self.grid.step.ghz();
        if x < 0.0 || x > (self.grid.len - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).min(self.grid.len - 2);
        let t = x - i as f64;
        self.intensity[i] * (1.0 - t) + self.intensity[i + 1] * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn thermal_occupation_reference_values() {
        let ws = Frequency::from_ghz(reference::OMEGA_S_GHZ);
        let hot = thermal_occupation(ws, 1.0).unwrap();
        let cold = thermal_occupation(ws, 0.1).unwrap();
        assert!((hot - 5.4).abs() < 0.1, "{hot}");
        assert!((cold - 0.2).abs() < 0.05, "{cold}");
        assert_eq!(thermal_occupation(ws, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn thermal_occupation_rejects_bad_input() {
        let ws = Frequency::from_ghz(3.0);
        assert!(thermal_occupation(ws, 0.0).is_err());
        assert!(thermal_occupation(ws, -1.0).is_err());
        assert!(thermal_occupation(Frequency::ZERO, 1.0).is_err());
    }

    #[test]
    fn generalized_rabi_cases() {
        let c = DriveConfig::from_ghz(2.36, 2.625, 0.0, 3.5299).unwrap();
        assert!((c.generalized_rabi().ghz() - 3.53).abs() < 0.005);
        let c = DriveConfig::from_ghz(0.0, 1.7, 0.0, 3.5).unwrap();
        assert_eq!(c.generalized_rabi().ghz(), 1.7);
        let c = DriveConfig::from_ghz(-2.5, 0.0, 0.0, 3.5).unwrap();
        assert_eq!(c.generalized_rabi().ghz(), 2.5);
    }

    #[test]
    fn drive_validation() {
        assert!(DriveConfig::from_ghz(0.0, -1.0, 0.0, 3.5).is_err());
        assert!(DriveConfig::from_ghz(0.0, 1.0, -0.1, 3.5).is_err());
        assert!(DriveConfig::from_ghz(0.0, 1.0, 0.1, 0.0).is_err());
        assert!(DriveConfig::from_ghz(f64::NAN, 1.0, 0.1, 1.0).is_err());
        assert!(EmitterParams::new(Frequency::ZERO, Frequency::ZERO).is_err());
    }

    #[test]
    fn cavity_dissipation() {
        let c = AcousticCavity::reference();
        assert_relative_eq!(c.dissipation().ghz(), 3.5299 / 12562.0);
    }

    #[test]
    fn unit_conversions() {
        let f = Frequency::from_mhz(134.0);
        assert_relative_eq!(f.ghz(), 0.134, max_relative = 1e-15);
        assert_relative_eq!(f.angular(), TAU * 134e6, max_relative = 1e-15);
        assert_relative_eq!(Frequency::from_angular(f.angular()).ghz(), 0.134, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn cycles_round_trip_is_exact(x in -1e3f64..1e3) {
            let f = Frequency::from_ghz(x);
            prop_assert_eq!(Frequency::from_ghz(f.ghz()), f);
        }

        #[test]
        fn thermal_occupation_monotone(t in 0.01f64..10.0, dt in 1e-3f64..1.0, f in 0.5f64..20.0, df in 1e-3f64..1.0) {
            let w = Frequency::from_ghz(f);
            prop_assert!(thermal_occupation(w, t + dt).unwrap() > thermal_occupation(w, t).unwrap());
            prop_assert!(thermal_occupation(Frequency::from_ghz(f + df), t).unwrap() < thermal_occupation(w, t).unwrap());
        }

        #[test]
        fn detailed_balance(t in 0.02f64..10.0, f in 0.5f64..20.0) {
            let w = Frequency::from_ghz(f);
            let m = thermal_occupation(w, t).unwrap();
            let boltzmann = (-HBAR * w.angular() / (K_B * t)).exp();
            prop_assert!((boltzmann - m / (m + 1.0)).abs() <= 1e-14 * boltzmann.max(1e-300) + 1e-300);
        }
    }
}
