//! Steady state of the emitter coupled to a thermal phonon mode.
//!
//! `H = −(Δ/2)σ_z + (Ω_L/2)σ_x + ω_S b†b + (g₀/2)σ_z(b + b†)` with jump
//! operators `√γ σ₋`, `√(γ_S m_th) b†` and `√(γ_S(m_th+1)) b`, in the frame
//! rotating with the laser.
//!
//! The density matrix elements `ρ[(a,m),(a',m')]` are grouped by the phonon
//! row index `m`. Every term of the Liouvillian changes `m` by at most one,
//! so the stationarity equations are block tridiagonal in `m`. Phonon
//! coherences are generated at order `g₀^|m−m'|`, and elements with
//! `|m − m'|` above a coherence order `K` are dropped; `K` is raised until
//! the full Liouvillian residual is negligible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MapGrid;
use crate::error::{collect_indexed, Error, Result};
use crate::linalg::solve_block_tridiagonal;
use crate::model::{thermal_occupation, AcousticCavity, DriveConfig, EmitterParams, Frequency};
use crate::quadrature::gaussian_nodes;

/// Thermal tail mass allowed beyond the Fock cutoff.
const TAIL: f64 = 1e-8;
/// Relative change of `m_ss` accepted between successive cutoffs.
const FOCK_TOL: f64 = 1e-4;
/// Liouvillian residual, relative to the largest rate, accepted for a coherence order.
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladConfig {
    pub emitter: EmitterParams,
    /// Only Δ and Ω_L are used.
    pub drive: DriveConfig,
    pub cavity: AcousticCavity,
    /// Bath temperature in kelvin.
    pub temperature: f64,
    /// Highest Fock level kept; chosen from the thermal tail when `None`.
    pub m_max: Option<usize>,
    /// Largest `|m − m'|` kept; raised adaptively from 2 when `None`.
    pub coherence_order: Option<usize>,
}

impl LindbladConfig {
    pub fn new(emitter: EmitterParams, drive: DriveConfig, cavity: AcousticCavity, temperature: f64) -> Self {
        LindbladConfig { emitter, drive, cavity, temperature, m_max: None, coherence_order: None }
    }

    pub fn thermal_occupation(&self) -> Result<f64> {
        thermal_occupation(self.cavity.omega_s, self.temperature)
    }

    /// Smallest cutoff whose thermal tail `r^{M+1}`, `r = m_th/(m_th+1)`, is below 1e−8.
    pub fn default_m_max(&self) -> Result<usize> {
        let m_th = self.thermal_occupation()?;
        let r = m_th / (m_th + 1.0);
        if r <= 0.0 {
            return Ok(1);
        }
        let levels = (TAIL.ln() / r.ln()).ceil() as usize;
        Ok(levels.max(2) - 1)
    }

    fn validate(&self) -> Result<()> {
        self.drive.validate()?;
        if !(self.emitter.gamma.ghz() >= 0.0) || !(self.cavity.g0.ghz() >= 0.0) {
            return Err(Error::Domain("rates must be non-negative".into()));
        }
        if let Some(m) = self.m_max {
            if m < 1 {
                return Err(Error::Domain("m_max must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateResult {
    /// `⟨b†b⟩` in the steady state.
    pub m_ss: f64,
    pub m_th: f64,
    /// `(m_ss − m_th)/m_th`.
    pub cooling_c: f64,
    pub excited_population: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    /// `max |L ρ|` relative to the largest rate of the model.
    pub residual: f64,
    pub m_max: usize,
    pub coherence_order: usize,
    /// Phonon number distribution `p(m)`.
    pub phonon_populations: Vec<f64>,
}

/// Model constants in GHz (cycles); the common factor 2π drops out.
#[derive(Clone, Copy, Debug)]
struct Rates {
    delta: f64,
    rabi: f64,
    omega_s: f64,
    g0: f64,
    gamma: f64,
    gamma_s: f64,
    m_th: f64,
}

impl Rates {
    fn from_config(cfg: &LindbladConfig) -> Result<Self> {
        Ok(Rates {
            delta: cfg.drive.delta.ghz(),
            rabi: cfg.drive.rabi_l.ghz(),
            omega_s: cfg.cavity.omega_s.ghz(),
            g0: cfg.cavity.g0.ghz(),
            gamma: cfg.emitter.gamma.ghz(),
            gamma_s: cfg.cavity.dissipation().ghz(),
            m_th: cfg.thermal_occupation()?,
        })
    }

    fn largest(&self, m_max: usize) -> f64 {
        let m = m_max as f64;
        [self.delta.abs(), self.rabi, self.omega_s * m, self.gamma, self.gamma_s * (self.m_th + 1.0) * m, self.g0 * m.sqrt()]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

const G: usize = 0;
const E: usize = 1;
const SZ: [f64; 2] = [-1.0, 1.0];
const NE: [f64; 2] = [0.0, 1.0];

/// Window of column indices `m'` kept in row block `m`.
fn window(m: usize, k: usize, m_max: usize) -> (usize, usize) {
    (m.saturating_sub(k), (m + k).min(m_max))
}

fn local(m_col: usize, lo: usize, a: usize, b: usize) -> usize {
    4 * (m_col - lo) + 2 * a + b
}

/// Solves the banded stationarity equations and returns the dense, unit-trace ρ.
fn solve_banded(r: &Rates, m_max: usize, k: usize) -> Result<DMatrix<Complex64>> {
    let ha = [[r.delta / 2.0, r.rabi / 2.0], [r.rabi / 2.0, -r.delta / 2.0]];
    let i = Complex64::i();
    let n_blocks = m_max + 1;
    let sizes: Vec<usize> = (0..n_blocks).map(|m| { let (lo, hi) = window(m, k, m_max); 4 * (hi - lo + 1) }).collect();
    let mut lower = Vec::with_capacity(n_blocks);
    let mut diag = Vec::with_capacity(n_blocks);
    let mut upper = Vec::with_capacity(n_blocks);
    let mut rhs = Vec::with_capacity(n_blocks);
    let bbd = |m: usize| if m < m_max { (m + 1) as f64 } else { 0.0 };
    let down = r.gamma_s * (r.m_th + 1.0);
    let up = r.gamma_s * r.m_th;

    for m in 0..n_blocks {
        let (lo, hi) = window(m, k, m_max);
        let prev = if m > 0 { sizes[m - 1] } else { 1 };
        let next = if m + 1 < n_blocks { sizes[m + 1] } else { 1 };
        let mut d = DMatrix::<Complex64>::zeros(sizes[m], sizes[m]);
        let mut l = DMatrix::<Complex64>::zeros(sizes[m], prev);
        let mut u = DMatrix::<Complex64>::zeros(sizes[m], next);
        let (plo, phi) = if m > 0 { window(m - 1, k, m_max) } else { (1, 0) };
        let (nlo, nhi) = if m + 1 < n_blocks { window(m + 1, k, m_max) } else { (1, 0) };
        let sm = (m as f64).sqrt();
        let sm1 = ((m + 1) as f64).sqrt();
        for mc in lo..=hi {
            let smc = (mc as f64).sqrt();
            let smc1 = ((mc + 1) as f64).sqrt();
            for a in 0..2 {
                for b in 0..2 {
                    let row = local(mc, lo, a, b);
                    // −i H ρ, atomic part
                    for c in 0..2 {
                        d[(row, local(mc, lo, c, b))] += -i * ha[a][c];
                        d[(row, local(mc, lo, a, c))] += i * ha[c][b];
                    }
                    let mut own = -i * r.omega_s * (m as f64 - mc as f64);
                    own -= Complex64::from(r.gamma / 2.0 * (NE[a] + NE[b]));
                    own -= Complex64::from(up / 2.0 * (bbd(m) + bbd(mc)));
                    own -= Complex64::from(down / 2.0 * (m + mc) as f64);
                    d[(row, row)] += own;
                    if a == G && b == G {
                        d[(row, local(mc, lo, E, E))] += Complex64::from(r.gamma);
                    }
                    // phonon coupling from the right, same row block
                    let kb = i * (r.g0 / 2.0) * SZ[b];
                    if mc < hi {
                        d[(row, local(mc + 1, lo, a, b))] += kb * smc1;
                    }
                    if mc > lo {
                        d[(row, local(mc - 1, lo, a, b))] += kb * smc;
                    }
                    // phonon coupling from the left and jump terms, neighbouring blocks
                    let ka = -i * (r.g0 / 2.0) * SZ[a];
                    if m > 0 {
                        if mc >= plo && mc <= phi {
                            l[(row, local(mc, plo, a, b))] += ka * sm;
                        }
                        if mc >= 1 && mc - 1 >= plo && mc - 1 <= phi {
                            l[(row, local(mc - 1, plo, a, b))] += Complex64::from(up * sm * smc);
                        }
                    }
                    if m + 1 < n_blocks {
                        if mc >= nlo && mc <= nhi {
                            u[(row, local(mc, nlo, a, b))] += ka * sm1;
                        }
                        if mc < m_max && mc + 1 >= nlo && mc + 1 <= nhi {
                            u[(row, local(mc + 1, nlo, a, b))] += Complex64::from(down * sm1 * smc1);
                        }
                    }
                }
            }
        }
        lower.push(l);
        diag.push(d);
        upper.push(u);
        rhs.push(DVector::<Complex64>::zeros(sizes[m]));
    }
    // replace the equation of ρ[(g,0),(g,0)] by ρ[(g,0),(g,0)] = 1
    let pin = local(0, 0, G, G);
    diag[0].row_mut(pin).fill(Complex64::ZERO);
    upper[0].row_mut(pin).fill(Complex64::ZERO);
    diag[0][(pin, pin)] = Complex64::from(1.0);
    rhs[0][pin] = Complex64::from(1.0);

    let x = solve_block_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let dim = 2 * n_blocks;
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for (m, block) in x.iter().enumerate() {
        let (lo, hi) = window(m, k, m_max);
        for mc in lo..=hi {
            for a in 0..2 {
                for b in 0..2 {
                    rho[(2 * m + a, 2 * mc + b)] = block[local(mc, lo, a, b)];
                }
            }
        }
    }
    let trace: Complex64 = (0..dim).map(|j| rho[(j, j)]).sum();
    if !(trace.norm() > 0.0) || !trace.re.is_finite() {
        return Err(Error::Rank("steady state has vanishing trace".into()));
    }
    Ok(rho / trace)
}

/// Nonzero entries `(row, col, value)` of a square operator.
#[derive(Clone, Debug, Default)]
struct Sparse(Vec<(usize, usize, Complex64)>);

impl Sparse {
    fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let mut out = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != Complex64::ZERO {
                    out.push((i, j, m[(i, j)]));
                }
            }
        }
        Sparse(out)
    }

    fn adjoint(&self) -> Self {
        Sparse(self.0.iter().map(|&(i, j, v)| (j, i, v.conj())).collect())
    }

    fn product(&self, other: &Sparse, dim: usize) -> Sparse {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for &(k, j, v) in &other.0 {
            rows[k].push((j, v));
        }
        let mut acc = std::collections::BTreeMap::new();
        for &(i, k, a) in &self.0 {
            for &(j, b) in &rows[k] {
                *acc.entry((j, i)).or_insert(Complex64::ZERO) += a * b;
            }
        }
        Sparse(acc.into_iter().filter(|(_, v)| *v != Complex64::ZERO).map(|((j, i), v)| (i, j, v)).collect())
    }

    /// `self · x`
    fn left(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for &(i, k, v) in &self.0 {
            for j in 0..x.ncols() {
                out[(i, j)] += v * x[(k, j)];
            }
        }
        out
    }

    /// `x · self`
    fn right(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for &(k, j, v) in &self.0 {
            for i in 0..x.nrows() {
                out[(i, j)] += x[(i, k)] * v;
            }
        }
        out
    }
}

struct Operators {
    h: Sparse,
    /// `(C, C†, C†C)` of every jump operator.
    jumps: Vec<(Sparse, Sparse, Sparse)>,
}

fn operators(r: &Rates, m_max: usize) -> Operators {
    let dim = 2 * (m_max + 1);
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let mut sm = DMatrix::<Complex64>::zeros(dim, dim);
    let mut b = DMatrix::<Complex64>::zeros(dim, dim);
    for m in 0..=m_max {
        let (g, e) = (2 * m, 2 * m + 1);
        h[(g, g)] = Complex64::from(r.delta / 2.0 + r.omega_s * m as f64);
        h[(e, e)] = Complex64::from(-r.delta / 2.0 + r.omega_s * m as f64);
        h[(g, e)] = Complex64::from(r.rabi / 2.0);
        h[(e, g)] = Complex64::from(r.rabi / 2.0);
        sm[(g, e)] = Complex64::from(r.gamma.sqrt());
        if m < m_max {
            let s = ((m + 1) as f64).sqrt();
            for a in 0..2 {
                b[(2 * m + a, 2 * (m + 1) + a)] = Complex64::from(s);
                let k = Complex64::from(r.g0 / 2.0 * SZ[a] * s);
                h[(2 * m + a, 2 * (m + 1) + a)] += k;
                h[(2 * (m + 1) + a, 2 * m + a)] += k;
            }
        }
    }
    let bd = b.adjoint();
    let jumps = [sm, bd * Complex64::from((r.gamma_s * r.m_th).sqrt()), b * Complex64::from((r.gamma_s * (r.m_th + 1.0)).sqrt())]
        .into_iter()
        .map(|c| {
            let s = Sparse::from_dense(&c);
            let cd = s.adjoint();
            let cdc = cd.product(&s, dim);
            (s, cd, cdc)
        })
        .collect();
    Operators { h: Sparse::from_dense(&h), jumps }
}

fn liouvillian(ops: &Operators, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let i = Complex64::i();
    let mut out = (ops.h.left(rho) - ops.h.right(rho)) * (-i);
    for (c, cd, cdc) in &ops.jumps {
        out += c.left(&cd.right(rho)) - (cdc.left(rho) + cdc.right(rho)) * Complex64::from(0.5);
    }
    out
}

struct Solved {
    rho: DMatrix<Complex64>,
    residual: f64,
    k: usize,
}

fn solve_fixed_cutoff(r: &Rates, m_max: usize, k_init: Option<usize>) -> Result<Solved> {
    let ops = operators(r, m_max);
    let scale = r.largest(m_max);
    let mut k = k_init.unwrap_or(2).min(m_max);
    loop {
        let rho = solve_banded(r, m_max, k)?;
        let lr = liouvillian(&ops, &rho);
        let residual = lr.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
        if residual <= RESIDUAL_TOL || k >= m_max || k_init.is_some() {
            return Ok(Solved { rho, residual, k });
        }
        k = (2 * k).min(m_max);
    }
}

fn mean_phonon(rho: &DMatrix<Complex64>) -> f64 {
    (0..rho.nrows()).map(|j| (j / 2) as f64 * rho[(j, j)].re).sum()
}

/// Steady state of the coupled system.
///
/// With an explicit `m_max` the cutoff is used as given. Otherwise the
/// cutoff starts from the thermal tail estimate and grows by 25% until `m_ss`
/// changes by less than 1e−4 relative.
pub fn lindblad_steady_state(cfg: &LindbladConfig) -> Result<SteadyStateResult> {
    cfg.validate()?;
    let rates = Rates::from_config(cfg)?;
    if let Some(m_max) = cfg.m_max {
        let solved = solve_fixed_cutoff(&rates, m_max, cfg.coherence_order)?;
        return Ok(summarize(&solved, m_max, rates.m_th));
    }
    let start = cfg.default_m_max()?;
    let cap = 8 * start + 64;
    let mut m_max = start;
    let mut solved = solve_fixed_cutoff(&rates, m_max, cfg.coherence_order)?;
    let mut m_ss = mean_phonon(&solved.rho);
    loop {
        let next = (((m_max as f64) * 1.25).ceil() as usize).max(m_max + 1);
        if next > cap {
            return Err(Error::Truncation { previous: m_ss, last: m_ss });
        }
        let refined = solve_fixed_cutoff(&rates, next, cfg.coherence_order)?;
        let m_next = mean_phonon(&refined.rho);
        let change = (m_next - m_ss).abs() / m_next.abs().max(f64::MIN_POSITIVE);
        m_max = next;
        solved = refined;
        m_ss = m_next;
        if change < FOCK_TOL {
            return Ok(summarize(&solved, m_max, rates.m_th));
        }
    }
}

fn summarize(solved: &Solved, m_max: usize, m_th: f64) -> SteadyStateResult {
    let rho = &solved.rho;
    let dim = rho.nrows();
    let trace: Complex64 = (0..dim).map(|j| rho[(j, j)]).sum();
    let hermiticity_error = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let hermitian = (rho + rho.adjoint()) * Complex64::from(0.5);
    let min_eigenvalue = hermitian.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let phonon_populations: Vec<f64> = (0..=m_max).map(|m| rho[(2 * m, 2 * m)].re + rho[(2 * m + 1, 2 * m + 1)].re).collect();
    let excited_population = (0..=m_max).map(|m| rho[(2 * m + 1, 2 * m + 1)].re).sum();
    let m_ss = mean_phonon(rho);
    SteadyStateResult {
        m_ss,
        m_th,
        cooling_c: (m_ss - m_th) / m_th,
        excited_population,
        trace_error: (trace - Complex64::from(1.0)).norm(),
        hermiticity_error,
        min_eigenvalue,
        residual: solved.residual,
        m_max,
        coherence_order: solved.k,
        phonon_populations,
    }
}

/// Cooling performance on a (Δ, Ω_L) grid, each point averaged over a
/// Gaussian detuning distribution.
///
/// Since C is affine in `m_ss`, averaging C and averaging `m_ss` give the
/// same map. Diagnostics report the worst node.
pub fn cooling_performance_map(grid: &MapGrid, cfg: &LindbladConfig, diffusion_fwhm: Frequency, n_nodes: usize) -> Result<Vec<SteadyStateResult>> {
    let nodes = if diffusion_fwhm.ghz() == 0.0 {
        vec![(Frequency::ZERO, 1.0)]
    } else {
        gaussian_nodes(diffusion_fwhm, n_nodes)?
    };
    let results: Vec<Result<SteadyStateResult>> = grid
        .points()
        .par_iter()
        .map(|&(delta, rabi)| {
            let mut acc: Option<SteadyStateResult> = None;
            for (d, w) in &nodes {
                let mut c = *cfg;
                c.drive = cfg.drive.with_delta(delta + *d).with_rabi_l(rabi);
                let s = lindblad_steady_state(&c)?;
                acc = Some(match acc {
                    None => SteadyStateResult {
                        m_ss: w * s.m_ss,
                        cooling_c: w * s.cooling_c,
                        excited_population: w * s.excited_population,
                        phonon_populations: s.phonon_populations.iter().map(|p| w * p).collect(),
                        ..s
                    },
                    Some(a) => {
                        let mut pops = a.phonon_populations;
                        pops.resize(pops.len().max(s.phonon_populations.len()), 0.0);
                        for (p, q) in pops.iter_mut().zip(&s.phonon_populations) {
                            *p += w * q;
                        }
                        SteadyStateResult {
                            m_ss: a.m_ss + w * s.m_ss,
                            m_th: a.m_th,
                            cooling_c: a.cooling_c + w * s.cooling_c,
                            excited_population: a.excited_population + w * s.excited_population,
                            trace_error: a.trace_error.max(s.trace_error),
                            hermiticity_error: a.hermiticity_error.max(s.hermiticity_error),
                            min_eigenvalue: a.min_eigenvalue.min(s.min_eigenvalue),
                            residual: a.residual.max(s.residual),
                            m_max: a.m_max.max(s.m_max),
                            coherence_order: a.coherence_order.max(s.coherence_order),
                            phonon_populations: pops,
                        }
                    }
                });
            }
            Ok(acc.expect("at least one node"))
        })
        .collect();
    collect_indexed(results)
}
