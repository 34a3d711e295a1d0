//! Optical Bloch equations with a periodically modulated detuning.
//!
//! The state vector is `(⟨σ₊⟩, ⟨σ₋⟩, ⟨σ_z⟩)` and obeys `ẋ = M(t)x + s` with
//! the source `s = (0, 0, −γ)`. The acoustic wave replaces the detuning by
//! `Δ − 2Ω_S cos(ω_S t + φ)`, so `M` has period `2π/ω_S`.
//!
//! The limit cycle is found by harmonic balance: inserting
//! `x(t) = Σ_k x_k e^{ikω_S t}` couples harmonic `k` only to `k ± 1`, which gives
//! a block-tridiagonal system that is solved directly.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, SMatrix, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_block_tridiagonal3;
use crate::model::{CoherentLine, DriveConfig, EmitterParams, Frequency};
use crate::ode::{integrate, OdeOptions};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Expectation values `⟨σ₊⟩`, `⟨σ₋⟩`, `⟨σ_z⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub sp: Complex64,
    pub sm: Complex64,
    pub sz: f64,
}

impl BlochState {
    pub fn ground() -> Self {
        BlochState { sp: Complex64::ZERO, sm: Complex64::ZERO, sz: -1.0 }
    }

    pub fn excited() -> Self {
        BlochState { sp: Complex64::ZERO, sm: Complex64::ZERO, sz: 1.0 }
    }

    pub fn to_vector(&self) -> Vector3<Complex64> {
        Vector3::new(self.sp, self.sm, Complex64::from(self.sz))
    }

    /// Drops the (unphysical) imaginary part of the third component.
    pub fn from_vector(v: &Vector3<Complex64>) -> Self {
        BlochState { sp: v[0], sm: v[1], sz: v[2].re }
    }

    /// ρ_ee = (1 + ⟨σ_z⟩)/2.
    pub fn excited_population(&self) -> f64 {
        0.5 * (1.0 + self.sz)
    }

    /// `4|⟨σ₊⟩|² + ⟨σ_z⟩²`, at most one for a physical state.
    pub fn bloch_radius_squared(&self) -> f64 {
        4.0 * self.sp.norm_sqr() + self.sz * self.sz
    }

    /// Distance from the `⟨σ₊⟩ = ⟨σ₋⟩*` structure.
    pub fn conjugation_defect(&self) -> f64 {
        (self.sp - self.sm.conj()).norm()
    }
}

/// Generator `M(t)` and source of the modulated Bloch equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochGenerator {
    pub drive: DriveConfig,
    pub emitter: EmitterParams,
    /// Acoustic phase φ in `cos(ω_S t + φ)`.
    pub phase: f64,
    gamma: f64,
    delta: f64,
    rabi_l: f64,
    rabi_s: f64,
    omega_s: f64,
}

impl BlochGenerator {
    pub fn new(drive: DriveConfig, emitter: EmitterParams) -> Self {
        Self::with_phase(drive, emitter, 0.0)
    }

    pub fn with_phase(drive: DriveConfig, emitter: EmitterParams, phase: f64) -> Self {
        BlochGenerator {
            drive,
            emitter,
            phase,
            gamma: emitter.gamma.angular(),
            delta: drive.delta.angular(),
            rabi_l: drive.rabi_l.angular(),
            rabi_s: drive.rabi_s.angular(),
            omega_s: drive.omega_s.angular(),
        }
    }

    /// The same generator with its time origin moved to `t0`.
    pub fn shifted(&self, t0: f64) -> Self {
        let phase = (self.phase + self.omega_s * t0).rem_euclid(TAU);
        Self::with_phase(self.drive, self.emitter, phase)
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega_s
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    /// Instantaneous detuning `Δ − 2Ω_S cos(ω_S t + φ)` in rad/s.
    pub fn detuning_at(&self, t: f64) -> f64 {
        let arg = (self.omega_s * t + self.phase).rem_euclid(TAU);
        self.delta - 2.0 * self.rabi_s * arg.cos()
    }

    pub fn matrix(&self, t: f64) -> Matrix3<Complex64> {
        let d = self.detuning_at(t);
        let g = self.gamma;
        let w = self.rabi_l;
        Matrix3::new(
            Complex64::new(-g / 2.0, -d),
            Complex64::ZERO,
            Complex64::new(0.0, -w / 2.0),
            Complex64::ZERO,
            Complex64::new(-g / 2.0, d),
            Complex64::new(0.0, w / 2.0),
            Complex64::new(0.0, -w),
            Complex64::new(0.0, w),
            Complex64::from(-g),
        )
    }

    pub fn source(&self) -> Vector3<Complex64> {
        Vector3::new(Complex64::ZERO, Complex64::ZERO, Complex64::from(-self.gamma))
    }

    /// `M(t)·y + s·affine` applied column-wise.
    fn apply<const C: usize>(&self, t: f64, y: &SMatrix<Complex64, 3, C>, affine: Complex64) -> SMatrix<Complex64, 3, C> {
        let d = self.detuning_at(t);
        let g = self.gamma;
        let w = self.rabi_l;
        let mut out = SMatrix::<Complex64, 3, C>::zeros();
        let a = Complex64::new(-g / 2.0, -d);
        let b = Complex64::new(-g / 2.0, d);
        let half = Complex64::new(0.0, w / 2.0);
        let full = Complex64::new(0.0, w);
        for c in 0..C {
            let (x0, x1, x2) = (y[(0, c)], y[(1, c)], y[(2, c)]);
            out[(0, c)] = a * x0 - half * x2;
            out[(1, c)] = b * x1 + half * x2;
            out[(2, c)] = full * (x1 - x0) - g * x2 - g * affine;
        }
        out
    }

    fn require_dissipative(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::Degenerate("γ = 0 has no unique limit cycle".into()));
        }
        Ok(())
    }
}

/// Sampled solution of the Bloch equations.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
}

/// Adaptive integration over `[t0, t1]`; returns every accepted step, endpoints included.
pub fn propagate(gen: &BlochGenerator, initial: BlochState, t0: f64, t1: f64, tol: f64) -> Result<Trajectory> {
    if !(t1 > t0) || !(tol > 0.0) {
        return Err(Error::Precondition("propagate needs t1 > t0 and tol > 0".into()));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let one = Complex64::from(1.0);
    integrate(
        |t, y: &Vector3<Complex64>| gen.apply(t, y, one),
        t0,
        initial.to_vector(),
        &[t1],
        &OdeOptions::with_tol(tol),
        |t, y| {
            times.push(t);
            states.push(BlochState::from_vector(y));
        },
    )?;
    Ok(Trajectory { times, states })
}

/// The state at each of `times` (sorted, not before `t0`).
pub fn propagate_at(gen: &BlochGenerator, initial: BlochState, t0: f64, times: &[f64], tol: f64) -> Result<Vec<BlochState>> {
    let v = evolve(gen, initial.to_vector(), Complex64::from(1.0), t0, times, tol)?;
    Ok(v.iter().map(BlochState::from_vector).collect())
}

/// Evolves a raw vector under `ẏ = M(t)y + s·affine`.
///
/// `affine` is the trace of the operator whose expectation vector is `y`; it
/// is one for a density matrix and `⟨σ₊⟩` for the regression operator `ρσ₊`.
pub fn evolve(gen: &BlochGenerator, y0: Vector3<Complex64>, affine: Complex64, t0: f64, times: &[f64], tol: f64) -> Result<Vec<Vector3<Complex64>>> {
    integrate(|t, y: &Vector3<Complex64>| gen.apply(t, y, affine), t0, y0, times, &OdeOptions::with_tol(tol), |_, _| {})
}

/// Fundamental matrix of `ẏ = M(t)y` over one acoustic period.
pub fn monodromy(gen: &BlochGenerator, tol: f64) -> Result<Matrix3<Complex64>> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tol must be positive".into()));
    }
    let out = integrate(
        |t, y: &Matrix3<Complex64>| gen.apply(t, y, Complex64::ZERO),
        0.0,
        Matrix3::identity(),
        &[gen.period()],
        &OdeOptions::with_tol(tol),
        |_, _| {},
    )?;
    Ok(out[0])
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix3<Complex64>) -> f64 {
    match m.eigenvalues() {
        Some(ev) => ev.iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => f64::NAN,
    }
}

/// Stationary Bloch vector without acoustic modulation.
pub fn static_steady_state(drive: &DriveConfig, emitter: &EmitterParams) -> BlochState {
    let g = emitter.gamma.angular();
    let d = drive.delta.angular();
    let w = drive.rabi_l.angular();
    let denom = d * d + g * g / 4.0;
    let sz = -denom / (denom + w * w / 2.0);
    let sp = -I * (w / 2.0) * sz / Complex64::new(g / 2.0, d);
    BlochState { sp, sm: sp.conj(), sz }
}

/// ρ_ee = (Ω_L²/4)/(Δ² + Ω_L²/2 + γ²/4) of the unmodulated drive.
pub fn static_excited_population(drive: &DriveConfig, emitter: &EmitterParams) -> f64 {
    let g = emitter.gamma.angular();
    let d = drive.delta.angular();
    let w = drive.rabi_l.angular();
    (w * w / 4.0) / (d * d + w * w / 2.0 + g * g / 4.0)
}

/// Harmonic count `⌈2Ω_S/ω_S + Ω_L/ω_S⌉ + 8`.
pub fn default_harmonics(drive: &DriveConfig) -> usize {
    let ws = drive.omega_s.ghz();
    ((2.0 * drive.rabi_s.ghz() + drive.rabi_l.ghz()) / ws).ceil() as usize + 8
}

/// Limit cycle `x(t) = Σ_k x_k e^{ikω_S t}`, `k ∈ [−N, N]`.
#[derive(Clone, Debug)]
pub struct FloquetSolution {
    harmonics: Vec<Vector3<Complex64>>,
    pub n_harmonics: usize,
    /// Max over one period of `|ẋ − M x − s|/γ`.
    pub residual: f64,
    omega_s: f64,
}

impl FloquetSolution {
    pub fn coefficient(&self, k: i64) -> Vector3<Complex64> {
        let n = self.n_harmonics as i64;
        if k.abs() > n {
            Vector3::zeros()
        } else {
            self.harmonics[(k + n) as usize]
        }
    }

    pub fn vector_at(&self, t: f64) -> Vector3<Complex64> {
        let n = self.n_harmonics as i64;
        let step = Complex64::from_polar(1.0, (self.omega_s * t).rem_euclid(TAU));
        let mut phasor = step.powi(-(n as i32));
        let mut acc = Vector3::zeros();
        for h in &self.harmonics {
            acc += h * phasor;
            phasor *= step;
        }
        acc
    }

    pub fn state_at(&self, t: f64) -> BlochState {
        BlochState::from_vector(&self.vector_at(t))
    }

    /// Period average of ρ_ee.
    pub fn mean_excited_population(&self) -> f64 {
        0.5 * (1.0 + self.coefficient(0)[2].re)
    }

    /// `|x_N| / |x_0|`.
    pub fn tail_ratio(&self) -> f64 {
        let n = self.n_harmonics as i64;
        let edge = self.coefficient(n).norm().max(self.coefficient(-n).norm());
        edge / self.coefficient(0).norm()
    }

    /// Coherent scattering comb: harmonic `k` of `⟨σ₋⟩` radiates at `−kω_S`
    /// with weight `|⟨σ₋⟩_k|²`.
    pub fn coherent_lines(&self) -> Vec<CoherentLine> {
        let n = self.n_harmonics as i64;
        let ws = Frequency::from_angular(self.omega_s);
        (-n..=n)
            .map(|k| CoherentLine { offset: ws * (-k as f64), weight: self.coefficient(k)[1].norm_sqr() })
            .filter(|l| l.weight > 0.0)
            .collect()
    }

    /// Period average of `⟨σ₊(t)⟩⟨σ₋(t+τ)⟩`.
    pub fn coherent_correlation(&self, tau: f64) -> Complex64 {
        let n = self.n_harmonics as i64;
        (-n..=n)
            .map(|k| {
                let sp = self.coefficient(-k)[0];
                let sm = self.coefficient(k)[1];
                sp * sm * Complex64::from_polar(1.0, (k as f64 * self.omega_s * tau).rem_euclid(TAU))
            })
            .sum()
    }
}

/// Solves the truncated harmonic-balance system for an arbitrary source.
pub fn harmonic_balance(gen: &BlochGenerator, n_harmonics: usize, source: Vector3<Complex64>) -> Result<Vec<Vector3<Complex64>>> {
    gen.require_dissipative()?;
    let n = n_harmonics as i64;
    let m0 = {
        // M(t) without the modulation
        let mut m = gen.matrix(0.0);
        let d = gen.delta;
        m[(0, 0)] = Complex64::new(-gen.gamma / 2.0, -d);
        m[(1, 1)] = Complex64::new(-gen.gamma / 2.0, d);
        m
    };
    let e_plus = Complex64::from_polar(1.0, gen.phase);
    let up = I * gen.rabi_s * e_plus;
    let down = I * gen.rabi_s * e_plus.conj();
    let p = Matrix3::from_diagonal(&Vector3::new(up, -up, Complex64::ZERO));
    let q = Matrix3::from_diagonal(&Vector3::new(down, -down, Complex64::ZERO));
    let size = (2 * n + 1) as usize;
    let mut diag = Vec::with_capacity(size);
    let mut rhs = vec![Vector3::zeros(); size];
    for k in -n..=n {
        let mut d = m0;
        let shift = I * (k as f64) * gen.omega_s;
        for j in 0..3 {
            d[(j, j)] -= shift;
        }
        diag.push(d);
    }
    rhs[n as usize] = -source;
    solve_block_tridiagonal3(&vec![p; size], &diag, &vec![q; size], &rhs)
}

fn substitution_residual(gen: &BlochGenerator, sol: &FloquetSolution) -> f64 {
    let points = 64.max(4 * (2 * sol.n_harmonics + 1));
    let period = gen.period();
    let n = sol.n_harmonics as i64;
    let s = gen.source();
    let mut worst = 0.0_f64;
    for j in 0..points {
        let t = period * j as f64 / points as f64;
        let x = sol.vector_at(t);
        let mut dx = Vector3::zeros();
        for k in -n..=n {
            let ph = Complex64::from_polar(1.0, (k as f64 * gen.omega_s * t).rem_euclid(TAU));
            dx += sol.coefficient(k) * (I * k as f64 * gen.omega_s * ph);
        }
        let r = dx - gen.matrix(t) * x - s;
        worst = worst.max(r.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    worst / gen.gamma
}

/// Harmonic cap used by [`floquet_steady_state`].
pub const MAX_HARMONICS: usize = 512;

/// Limit-cycle steady state, doubling the harmonic count until the
/// substitution residual drops below `tol`.
pub fn floquet_steady_state(gen: &BlochGenerator, n_harmonics: usize, tol: f64) -> Result<FloquetSolution> {
    floquet_steady_state_capped(gen, n_harmonics, tol, MAX_HARMONICS)
}

pub fn floquet_steady_state_capped(gen: &BlochGenerator, n_harmonics: usize, tol: f64, cap: usize) -> Result<FloquetSolution> {
    if n_harmonics < 1 {
        return Err(Error::Precondition("need at least one harmonic".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tol must be positive".into()));
    }
    let mut n = n_harmonics;
    loop {
        let harmonics = harmonic_balance(gen, n, gen.source())?;
        let mut sol = FloquetSolution { harmonics, n_harmonics: n, residual: 0.0, omega_s: gen.omega_s };
        sol.residual = substitution_residual(gen, &sol);
        if sol.residual <= tol {
            return Ok(sol);
        }
        if n >= cap {
            return Err(Error::NonConvergence { what: format!("harmonic balance with {n} harmonics"), residual: sol.residual });
        }
        n = (2 * n).min(cap);
    }
}

/// [`floquet_steady_state`] with the default harmonic count and tolerance.
pub fn limit_cycle(drive: &DriveConfig, emitter: &EmitterParams) -> Result<FloquetSolution> {
    let gen = BlochGenerator::new(*drive, *emitter);
    floquet_steady_state(&gen, default_harmonics(drive), 1e-10)
}
