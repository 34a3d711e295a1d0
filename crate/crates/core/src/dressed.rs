//! Doubly dressed states of the emitter, laser photons and cavity phonons.
//!
//! The laser mixes `|g, n+1⟩` and `|e, n⟩` by the angle θ_L; the phonon
//! coupling then mixes `|−, m+1⟩` and `|+, m⟩` by θ_S. The resulting twelve
//! dipole-allowed transitions fall into three triplets centered at
//! `ω_L − ω_S`, `ω_L` and `ω_L + ω_S`, each with side lines `±G` away.
//!
//! Field amplitudes enter classically: `g_L√n → Ω_L` and `g₀√m → Ω_S`.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DriveConfig, Frequency};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingAngles {
    /// Optical mixing angle in `[0, π/2]`.
    pub theta_l: f64,
    /// Acoustic mixing angle in `[0, π/2]`; π/4 at the Rabi resonance.
    pub theta_s: f64,
    /// Set when Ω_L = Δ = 0 and θ_L is fixed by convention.
    pub degenerate: bool,
}

/// θ_L = ½ atan2(Ω_L, Δ) and θ_S = ½ atan2(Ω_S sin 2θ_L, ω_S − Ω_R).
///
/// The two-argument form keeps θ_S continuous through π/4 at ω_S = Ω_R. As
/// Ω_S → 0 it tends to 0 for ω_S > Ω_R and to π/2 for ω_S < Ω_R, i.e. the
/// doubly dressed states reduce to `|−, m+1⟩` or `|+, m⟩` respectively.
pub fn mixing_angles(config: &DriveConfig) -> MixingAngles {
    let (wl, d) = (config.rabi_l.ghz(), config.delta.ghz());
    let degenerate = wl == 0.0 && d == 0.0;
    let theta_l = if degenerate { FRAC_PI_4 } else { 0.5 * wl.atan2(d) };
    let coupling = config.rabi_s.ghz() * (2.0 * theta_l).sin();
    let detuning = config.omega_s.ghz() - config.generalized_rabi().ghz();
    let theta_s = if coupling == 0.0 && detuning == 0.0 { FRAC_PI_4 } else { 0.5 * coupling.atan2(detuning) };
    MixingAngles { theta_l, theta_s, degenerate }
}

/// G = √((ω_S − Ω_R)² + (Ω_S sin 2θ_L)²).
pub fn dressed_splitting(config: &DriveConfig) -> Frequency {
    let theta_l = mixing_angles(config).theta_l;
    let detuning = config.omega_s.ghz() - config.generalized_rabi().ghz();
    Frequency::from_ghz(detuning.hypot(config.rabi_s.ghz() * (2.0 * theta_l).sin()))
}

/// Triplet membership of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    /// Centered at `ω_L − ω_S` (transitions 1–4).
    Lower,
    /// Centered at `ω_L` (transitions 5–8).
    Central,
    /// Centered at `ω_L + ω_S` (transitions 9–12).
    Upper,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Lower => "lower",
            Group::Central => "central",
            Group::Upper => "upper",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    /// 1-based transition index.
    pub index: usize,
    pub group: Group,
    /// Offset from the laser frequency.
    pub frequency: Frequency,
    /// Absolute frequency, when the laser frequency is known.
    pub absolute: Option<Frequency>,
    /// `|⟨f|σ_x|i⟩|²`.
    pub dipole_weight: f64,
    /// Phonon number change per emitted photon.
    pub delta_n: f64,
}

/// Rows of the transition table as `(weight, δN)` for angles `(θ_L, θ_S)`.
///
/// The δN of transitions 6 and 7 changes sign at the Rabi resonance.
pub fn table_entries(theta_l: f64, theta_s: f64) -> [(f64, f64); 12] {
    entries_from_trig([cos_double(theta_l), (2.0 * theta_l).sin(), cos_double(theta_s), (2.0 * theta_s).sin()])
}

/// `[cos 2θ_L, sin 2θ_L, cos 2θ_S, sin 2θ_S]` straight from the drive, which
/// avoids the rounding of angles close to π/2.
fn double_angle_trig(config: &DriveConfig) -> [f64; 4] {
    let (wl, d) = (config.rabi_l.ghz(), config.delta.ghz());
    let rabi_r = wl.hypot(d);
    let (c2l, s2l) = if rabi_r == 0.0 { (0.0, 1.0) } else { (d / rabi_r, wl / rabi_r) };
    let coupling = config.rabi_s.ghz() * s2l;
    let detuning = config.omega_s.ghz() - rabi_r;
    let g = detuning.hypot(coupling);
    let (c2s, s2s) = if g == 0.0 { (0.0, 1.0) } else { (detuning / g, coupling / g) };
    [c2l, s2l, c2s, s2s]
}

fn entries_from_trig([c2l, s2l, c2s, s2s]: [f64; 4]) -> [(f64, f64); 12] {
    let (cl2, sl2) = squared_cos_sin(c2l, s2l);
    let (cs2, ss2) = squared_cos_sin(c2s, s2s);
    let mixed = s2s * s2s / 4.0;
    let central = cl2 * sl2 * c2s * c2s;
    [
        (cl2 * cl2 * mixed, 1.0),
        (cl2 * cl2 * cs2 * cs2, 2.0 * ss2),
        (cl2 * cl2 * ss2 * ss2, 2.0 * cs2),
        (cl2 * cl2 * mixed, 1.0),
        (central, 0.0),
        (4.0 * cl2 * sl2 * mixed, -c2s),
        (4.0 * cl2 * sl2 * mixed, c2s),
        (central, 0.0),
        (sl2 * sl2 * mixed, -1.0),
        (sl2 * sl2 * ss2 * ss2, -2.0 * cs2),
        (sl2 * sl2 * cs2 * cs2, -2.0 * ss2),
        (sl2 * sl2 * mixed, -1.0),
    ]
}

/// cos 2θ written as sin 2(π/4 − θ), exact zero at θ = π/4.
fn cos_double(theta: f64) -> f64 {
    (2.0 * (FRAC_PI_4 - theta)).sin()
}

/// `(cos²θ, sin²θ)` from `(cos 2θ, sin 2θ)` without cancellation.
fn squared_cos_sin(c2: f64, s2: f64) -> (f64, f64) {
    if c2 >= 0.0 {
        ((1.0 + c2) / 2.0, s2 * s2 / (2.0 * (1.0 + c2)))
    } else {
        (s2 * s2 / (2.0 * (1.0 - c2)), (1.0 - c2) / 2.0)
    }
}

/// Group and offset from the laser, in units of `(ω_S, G)`, of each row.
const LAYOUT: [(Group, f64, f64); 12] = [
    (Group::Lower, -1.0, 0.0),
    (Group::Lower, -1.0, 1.0),
    (Group::Lower, -1.0, -1.0),
    (Group::Lower, -1.0, 0.0),
    (Group::Central, 0.0, 0.0),
    (Group::Central, 0.0, 1.0),
    (Group::Central, 0.0, -1.0),
    (Group::Central, 0.0, 0.0),
    (Group::Upper, 1.0, 0.0),
    (Group::Upper, 1.0, 1.0),
    (Group::Upper, 1.0, -1.0),
    (Group::Upper, 1.0, 0.0),
];

pub fn transition_table(config: &DriveConfig) -> Vec<TransitionRecord> {
    let g = dressed_splitting(config);
    entries_from_trig(double_angle_trig(config))
        .iter()
        .zip(LAYOUT.iter())
        .enumerate()
        .map(|(i, ((w, dn), (group, ks, kg)))| {
            let frequency = config.omega_s * *ks + g * *kg;
            TransitionRecord {
                index: i + 1,
                group: *group,
                frequency,
                absolute: config.omega_l.map(|l| l + frequency),
                dipole_weight: *w,
                delta_n: *dn,
            }
        })
        .collect()
}

/// Mean phonon number change per emitted photon, `Σ δN·weight` over the table.
pub fn phonon_change_per_photon(config: &DriveConfig) -> f64 {
    entries_from_trig(double_angle_trig(config)).iter().map(|(w, dn)| w * dn).sum()
}

/// One line of the overlay: coincident transitions merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayLine {
    pub group: Group,
    pub frequency: Frequency,
    pub weight: f64,
    /// 1-based transition indices merged into this line.
    pub members: Vec<usize>,
}

/// The nine distinct lines of each drive: every triplet's center (two
/// transitions) and its two side lines.
pub fn overlay_lines(sweep: &[DriveConfig]) -> Result<Vec<Vec<OverlayLine>>> {
    if sweep.is_empty() {
        return Err(Error::Precondition("empty sweep".into()));
    }
    Ok(sweep
        .iter()
        .map(|cfg| {
            let t = transition_table(cfg);
            let line = |members: &[usize]| OverlayLine {
                group: t[members[0] - 1].group,
                frequency: t[members[0] - 1].frequency,
                weight: members.iter().map(|&m| t[m - 1].dipole_weight).sum(),
                members: members.to_vec(),
            };
            vec![
                line(&[1, 4]),
                line(&[2]),
                line(&[3]),
                line(&[5, 8]),
                line(&[6]),
                line(&[7]),
                line(&[9, 12]),
                line(&[10]),
                line(&[11]),
            ]
        })
        .collect())
}

/// Smallest side-line splitting `2G` of the central triplet as Ω_L varies
/// over `[lo, hi]` at the detuning and acoustic drive of `template`.
///
/// Returns `(Ω_L at the minimum, 2G)`; golden-section search on the convex
/// splitting.
pub fn anticrossing_gap(template: &DriveConfig, lo: Frequency, hi: Frequency) -> Result<(Frequency, Frequency)> {
    if !(hi.ghz() > lo.ghz()) || lo.ghz() < 0.0 {
        return Err(Error::Domain(format!("invalid Rabi frequency range [{lo}, {hi}]")));
    }
    let split = |x: f64| 2.0 * dressed_splitting(&template.with_rabi_l(Frequency::from_ghz(x))).ghz();
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ghz(), hi.ghz());
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (split(c), split(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = split(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = split(d);
        }
    }
    let x = 0.5 * (a + b);
    Ok((Frequency::from_ghz(x), Frequency::from_ghz(split(x))))
}

/// Comparison of the analytic doubly dressed levels with a numerical
/// diagonalization of the quantized Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigensystemReport {
    /// `(m + ½)ω_S ∓ G/2` in GHz, relative to the photon ladder.
    pub analytic: [f64; 2],
    /// Numerical eigenvalues closest to `analytic`.
    pub numeric: [f64; 2],
    pub max_deviation: f64,
    /// Numerical minus analytic splitting.
    pub splitting_deviation: f64,
    /// `Ω_S²/ω_S`, the size of the neglected off-resonant shifts.
    pub perturbative_scale: f64,
    pub eigenvalues: Vec<f64>,
    /// Phonon levels kept on either side of `m_ref`.
    pub half_width: usize,
    pub warnings: Vec<String>,
}

/// Diagonalizes the quantized Hamiltonian within one excitation manifold.
///
/// Basis `|g, m⟩` and `|e, m⟩` (photon number fixed by the manifold) for
/// `m` within `half_width` of `m_ref`. The couplings are scaled so that the
/// reference manifold reproduces the classical Ω_L and Ω_S:
/// `g_L = Ω_L/√(n_ref+1)` and `g₀ = Ω_S/√(m_ref+1)`. All values in GHz.
pub fn eigensystem_check(config: &DriveConfig, n_ref: usize, m_ref: usize, half_width: usize) -> EigensystemReport {
    let mut warnings = Vec::new();
    let lo = m_ref.saturating_sub(half_width);
    let hi = m_ref + half_width;
    let available = (m_ref - lo).min(hi - m_ref);
    if available < 2 {
        warnings.push(format!("phonon truncation keeps only {available} levels below m_ref; expect edge effects"));
    }
    let d = config.delta.ghz();
    let ws = config.omega_s.ghz();
    let g_l = config.rabi_l.ghz() / ((n_ref + 1) as f64).sqrt();
    let g0 = config.rabi_s.ghz() / ((m_ref + 1) as f64).sqrt();
    let levels = hi - lo + 1;
    let dim = 2 * levels;
    let idx = |atom: usize, m: usize| 2 * (m - lo) + atom;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for m in lo..=hi {
        h[(idx(0, m), idx(0, m))] = d / 2.0 + m as f64 * ws;
        h[(idx(1, m), idx(1, m))] = -d / 2.0 + m as f64 * ws;
        let c = g_l * ((n_ref + 1) as f64).sqrt() / 2.0;
        h[(idx(0, m), idx(1, m))] = c;
        h[(idx(1, m), idx(0, m))] = c;
        if m < hi {
            let k = g0 / 2.0 * ((m + 1) as f64).sqrt();
            // σ_z = |e⟩⟨e| − |g⟩⟨g|
            h[(idx(0, m), idx(0, m + 1))] = -k;
            h[(idx(0, m + 1), idx(0, m))] = -k;
            h[(idx(1, m), idx(1, m + 1))] = k;
            h[(idx(1, m + 1), idx(1, m))] = k;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let g = dressed_splitting(config).ghz();
    let centre = (m_ref as f64 + 0.5) * ws;
    let analytic = [centre - g / 2.0, centre + g / 2.0];
    let nearest = |x: f64| eigenvalues.iter().cloned().min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs())).unwrap_or(f64::NAN);
    let numeric = [nearest(analytic[0]), nearest(analytic[1])];
    if numeric[0] == numeric[1] {
        warnings.push("both analytic levels matched the same eigenvalue".into());
    }
    let max_deviation = (numeric[0] - analytic[0]).abs().max((numeric[1] - analytic[1]).abs());
    EigensystemReport {
        analytic,
        numeric,
        max_deviation,
        splitting_deviation: (numeric[1] - numeric[0]) - g,
        perturbative_scale: config.rabi_s.ghz().powi(2) / ws,
        eigenvalues,
        half_width: available,
        warnings,
    }
}
