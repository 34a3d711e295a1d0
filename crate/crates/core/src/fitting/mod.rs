//! Calibration models: acoustically modulated absorption, Lorentzian cavity
//! resonance, linear drive calibration, quadratic background extrapolation
//! and the extinction ratio of the background subtraction.

pub mod bessel;
pub mod lm;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Frequency;
use bessel::{bessel_j_all, sideband_count};
use lm::{covariance, minimize, LeastSquares, LmOptions};

/// `P(Δ) = offset + A (Γ/2)² Σ_n J_n²(2Ω_S/ω_S) / ((Δ − nω_S)² + (Γ/2)²)`.
///
/// The `(Γ/2)²` factor makes `A` the peak height without modulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionModel {
    pub omega_s: Frequency,
    pub rabi_s: Frequency,
    pub linewidth: Frequency,
    pub amplitude: f64,
    pub offset: f64,
    /// Highest sideband order kept on each side.
    pub n_sidebands: usize,
}

impl AbsorptionModel {
    pub fn new(omega_s: Frequency, rabi_s: Frequency, linewidth: Frequency, amplitude: f64) -> Result<Self> {
        if !(omega_s.ghz() > 0.0) {
            return Err(Error::Domain("acoustic frequency must be positive".into()));
        }
        if !(linewidth.ghz() > 0.0) {
            return Err(Error::Domain("linewidth must be positive".into()));
        }
        let x = 2.0 * rabi_s.ghz() / omega_s.ghz();
        Ok(AbsorptionModel { omega_s, rabi_s, linewidth, amplitude, offset: 0.0, n_sidebands: sideband_count(x) })
    }

    pub fn modulation_index(&self) -> f64 {
        2.0 * self.rabi_s.ghz() / self.omega_s.ghz()
    }

    /// Sideband weights `J_n²` for `n = 0..=n_sidebands`.
    pub fn weights(&self) -> Vec<f64> {
        bessel_j_all(self.n_sidebands, self.modulation_index()).into_iter().map(|j| j * j).collect()
    }

    pub fn evaluate(&self, delta: Frequency) -> f64 {
        evaluate_with(&self.weights(), self, delta.ghz())
    }
}

fn evaluate_with(weights: &[f64], m: &AbsorptionModel, d: f64) -> f64 {
    let hw2 = (m.linewidth.ghz() / 2.0).powi(2);
    let w = m.omega_s.ghz();
    let mut s = weights[0] / (d * d + hw2);
    for (n, j2) in weights.iter().enumerate().skip(1) {
        let x = n as f64 * w;
        s += j2 * (1.0 / ((d - x).powi(2) + hw2) + 1.0 / ((d + x).powi(2) + hw2));
    }
    m.offset + m.amplitude * hw2 * s
}

pub fn absorption_spectrum(model: &AbsorptionModel, deltas: &[Frequency]) -> Result<Vec<f64>> {
    if !(model.linewidth.ghz() > 0.0) {
        return Err(Error::Domain("linewidth must be positive".into()));
    }
    let w = model.weights();
    Ok(deltas.iter().map(|d| evaluate_with(&w, model, d.ghz())).collect())
}

/// Result of a least-squares fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Parameter names in covariance order.
    pub names: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Quantities computed from the fitted parameters.
    pub derived: BTreeMap<String, f64>,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub flags: Vec<String>,
}

impl FitReport {
    fn build(names: &[&str], values: &[f64], cov: &DMatrix<f64>, residuals: &DVector<f64>, iterations: usize, converged: bool) -> Self {
        let n = residuals.len().max(1) as f64;
        FitReport {
            names: names.iter().map(|s| s.to_string()).collect(),
            params: names.iter().zip(values).map(|(k, v)| (k.to_string(), *v)).collect(),
            stderr: names.iter().enumerate().map(|(i, k)| (k.to_string(), cov[(i, i)].max(0.0).sqrt())).collect(),
            covariance: (0..cov.nrows()).map(|i| cov.row(i).iter().cloned().collect()).collect(),
            derived: BTreeMap::new(),
            residual_rms: (residuals.norm_squared() / n).sqrt(),
            iterations,
            converged,
            flags: Vec::new(),
        }
    }

    /// Fitted value of a named parameter.
    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn error(&self, name: &str) -> f64 {
        self.stderr.get(name).copied().unwrap_or(f64::NAN)
    }
}

fn check_finite(data: &[(f64, f64)]) -> Result<()> {
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Domain("data contain non-finite values".into()));
    }
    Ok(())
}

fn span(data: &[(f64, f64)]) -> f64 {
    let lo = data.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

struct AbsorptionProblem<'a> {
    data: &'a [(f64, f64)],
    omega_s: Frequency,
}

impl AbsorptionProblem<'_> {
    fn model(&self, p: &DVector<f64>) -> AbsorptionModel {
        let mut m = AbsorptionModel {
            omega_s: self.omega_s,
            rabi_s: Frequency::from_ghz(p[0].abs()),
            linewidth: Frequency::from_ghz(p[1].abs().max(1e-12)),
            amplitude: p[2],
            offset: p[3],
            n_sidebands: 0,
        };
        m.n_sidebands = sideband_count(m.modulation_index());
        m
    }
}

impl LeastSquares for AbsorptionProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let m = self.model(p);
        let w = m.weights();
        DVector::from_iterator(self.data.len(), self.data.iter().map(|(x, y)| evaluate_with(&w, &m, *x) - y))
    }
}

/// Fits `(Ω_S, Γ, A, offset)` to (Δ in GHz, counts) with ω_S held fixed.
pub fn fit_absorption(data: &[(f64, f64)], omega_s: Frequency, init: &AbsorptionModel) -> Result<FitReport> {
    check_finite(data)?;
    if data.len() < 10 {
        return Err(Error::Precondition(format!("absorption fit needs at least 10 points, got {}", data.len())));
    }
    if span(data) < 2.0 * omega_s.ghz() {
        return Err(Error::Precondition("data must span at least two sideband spacings".into()));
    }
    let problem = AbsorptionProblem { data, omega_s };
    let p0 = DVector::from_vec(vec![init.rabi_s.ghz(), init.linewidth.ghz(), init.amplitude, init.offset]);
    let out = minimize(&problem, p0, &LmOptions::default());
    let mut p = out.params.clone();
    let mut jac = out.jacobian.clone();
    for k in 0..2 {
        if p[k] < 0.0 {
            p[k] = -p[k];
            jac.column_mut(k).neg_mut();
        }
    }
    let cov = covariance(&jac, &out.residuals);
    let mut report = FitReport::build(&["rabi_s_ghz", "linewidth_ghz", "amplitude", "offset"], p.as_slice(), &cov, &out.residuals, out.iterations, out.converged);
    report.derived.insert("modulation_index".into(), 2.0 * p[0] / omega_s.ghz());
    report.derived.insert("n_sidebands".into(), sideband_count(2.0 * p[0] / omega_s.ghz()) as f64);
    Ok(report)
}

/// Fits several absorption data sets in parallel; results keep the input order.
pub fn fit_absorption_batch(datasets: &[Vec<(f64, f64)>], omega_s: Frequency, init: &AbsorptionModel) -> Vec<Result<FitReport>> {
    datasets.par_iter().map(|d| fit_absorption(d, omega_s, init)).collect()
}

/// Lorentzian dip `offset − depth (w/2)² / ((f − f_c)² + (w/2)²)`.
pub fn lorentzian_dip(f: f64, center: f64, fwhm: f64, depth: f64, offset: f64) -> f64 {
    let hw2 = (fwhm / 2.0).powi(2);
    offset - depth * hw2 / ((f - center).powi(2) + hw2)
}

/// Parameters relative to a reference centre and width:
/// `f_c = f0 + s·p0`, `w = s·p1`.
struct LorentzianProblem<'a> {
    data: &'a [(f64, f64)],
    f0: f64,
    scale: f64,
}

impl LeastSquares for LorentzianProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data.iter().map(|(f, y)| {
                let u = (f - self.f0) / self.scale;
                lorentzian_dip(u, p[0], p[1], p[2], p[3]) - y
            }),
        )
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.data.len(), 4);
        let hw = p[1] / 2.0;
        for (i, (f, _)) in self.data.iter().enumerate() {
            let u = (f - self.f0) / self.scale;
            let x = u - p[0];
            let den = x * x + hw * hw;
            let l = hw * hw / den;
            j[(i, 0)] = -p[2] * 2.0 * x * hw * hw / (den * den);
            j[(i, 1)] = -p[2] * hw * x * x / (den * den);
            j[(i, 2)] = -l;
            j[(i, 3)] = 1.0;
        }
        j
    }
}

/// Fits a Lorentzian resonance to (frequency in GHz, reflection) pairs and
/// reports the quality factor `Q = f_c / w`.
pub fn fit_lorentzian(data: &[(f64, f64)]) -> Result<FitReport> {
    check_finite(data)?;
    if data.len() < 5 {
        return Err(Error::Precondition(format!("Lorentzian fit needs at least 5 points, got {}", data.len())));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let mut by_y = ys.clone();
    by_y.sort_by(f64::total_cmp);
    let baseline = by_y[by_y.len() * 3 / 4];
    let (imin, ymin) = ys.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &y)| if y < a.1 { (i, y) } else { a });
    let (imax, ymax) = ys.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &y)| if y > a.1 { (i, y) } else { a });
    let dip = baseline - ymin >= ymax - baseline;
    let (ic, depth0) = if dip { (imin, baseline - ymin) } else { (imax, baseline - ymax) };
    let half = baseline - depth0 / 2.0;
    let inside = |y: f64| if dip { y <= half } else { y >= half };
    let (mut lo, mut hi) = (ic, ic);
    while lo > 0 && inside(ys[lo - 1]) {
        lo -= 1;
    }
    while hi + 1 < ys.len() && inside(ys[hi + 1]) {
        hi += 1;
    }
    let step = span(&sorted) / (sorted.len() - 1) as f64;
    let width0 = (sorted[hi].0 - sorted[lo].0).max(step);
    let f0 = sorted[ic].0;
    let problem = LorentzianProblem { data, f0, scale: width0 };
    let out = minimize(&problem, DVector::from_vec(vec![0.0, 1.0, depth0, baseline]), &LmOptions::default());
    let p = &out.params;
    let s = width0;
    let values = [f0 + s * p[0], s * p[1].abs(), p[2], p[3]];
    let mut jac = out.jacobian.clone();
    if p[1] < 0.0 {
        jac.column_mut(1).neg_mut();
    }
    let raw = covariance(&jac, &out.residuals);
    let t = DMatrix::from_diagonal(&DVector::from_vec(vec![s, s, 1.0, 1.0]));
    let cov = &t * raw * &t;
    let mut report = FitReport::build(&["center_ghz", "fwhm_ghz", "depth", "offset"], &values, &cov, &out.residuals, out.iterations, out.converged);
    let depth_err = report.error("depth");
    let inside_span = values[0] >= sorted[0].0 && values[0] <= sorted[sorted.len() - 1].0;
    let resolved = values[2].abs() > 3.0 * depth_err
        && values[1] >= step
        && values[1].is_finite()
        && depth_err.is_finite()
        && inside_span;
    if resolved {
        let q = values[0] / values[1];
        let rel = ((cov[(0, 0)].max(0.0)).sqrt() / values[0]).hypot((cov[(1, 1)].max(0.0)).sqrt() / values[1]);
        report.derived.insert("quality".into(), q);
        report.derived.insert("quality_stderr".into(), q * rel);
    } else {
        report.flags.push("no resolvable resonance: quality factor undefined".into());
    }
    Ok(report)
}

/// Ordinary least squares `y ≈ X c` with covariance `σ²(XᵀX)⁻¹`.
fn linear_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Rank(format!("design matrix is rank deficient (singular values {smin:e} / {smax:e})")));
    }
    let c = svd.solve(y, 0.0).map_err(|e| Error::Rank(e.to_string()))?;
    let r = x * &c - y;
    let xtx = x.transpose() * x;
    let inv = xtx.try_inverse().ok_or_else(|| Error::Rank("normal matrix is singular".into()))?;
    let dof = x.nrows().saturating_sub(x.ncols()).max(1) as f64;
    let cov = inv * (r.norm_squared() / dof);
    Ok((c, (&cov + cov.transpose()) * 0.5, r))
}

/// Slope of `y = a x` (or `y = a x + b` with `intercept`).
pub fn fit_linear(data: &[(f64, f64)], intercept: bool) -> Result<FitReport> {
    check_finite(data)?;
    if data.len() < 2 {
        return Err(Error::Precondition("linear fit needs at least 2 points".into()));
    }
    let cols = if intercept { 2 } else { 1 };
    let x = DMatrix::from_fn(data.len(), cols, |i, j| if j == 0 { data[i].0 } else { 1.0 });
    let y = DVector::from_iterator(data.len(), data.iter().map(|p| p.1));
    let (c, cov, r) = linear_least_squares(&x, &y)?;
    let names: &[&str] = if intercept { &["slope", "intercept"] } else { &["slope"] };
    Ok(FitReport::build(names, c.as_slice(), &cov, &r, 1, true))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub stderr: f64,
    /// `c0 + c1 x + c2 x²`.
    pub coefficients: [f64; 3],
}

/// Quadratic fit of (bias, counts) extrapolated to `target`.
pub fn background_extrapolate(data: &[(f64, f64)], target: f64) -> Result<Extrapolation> {
    check_finite(data)?;
    if data.len() < 4 {
        return Err(Error::Precondition(format!("quadratic background needs at least 4 points, got {}", data.len())));
    }
    let x = DMatrix::from_fn(data.len(), 3, |i, j| data[i].0.powi(j as i32));
    let y = DVector::from_iterator(data.len(), data.iter().map(|p| p.1));
    let (c, cov, _) = linear_least_squares(&x, &y)?;
    let v = DVector::from_vec(vec![1.0, target, target * target]);
    let var = (v.transpose() * &cov * &v)[(0, 0)];
    Ok(Extrapolation { value: v.dot(&c), stderr: var.max(0.0).sqrt(), coefficients: [c[0], c[1], c[2]] })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRatio {
    pub value: f64,
    /// The two intensities coincide to within the floor; `value` is a lower bound.
    pub saturated: bool,
}

/// `η = I_meas / |I_meas − I_ext|`, with the denominator floored at `1e−12 I_meas`.
pub fn extinction_ratio(i_meas: f64, i_ext: f64) -> Result<ExtinctionRatio> {
    if !(i_meas > 0.0) || !i_ext.is_finite() {
        return Err(Error::Domain("measured intensity must be positive".into()));
    }
    let floor = 1e-12 * i_meas;
    let den = (i_meas - i_ext).abs();
    if den <= floor {
        return Ok(ExtinctionRatio { value: i_meas / floor, saturated: true });
    }
    Ok(ExtinctionRatio { value: i_meas / den, saturated: false })
}

/// Reads two numeric columns separated by commas or whitespace. Blank lines
/// and text after `#` are ignored; extra columns are an error.
pub fn parse_two_column(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line: k + 1, message: format!("expected 2 columns, found {}", fields.len()) });
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse { line: k + 1, message: format!("{s:?}: {e}") });
        out.push((parse(fields[0])?, parse(fields[1])?));
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    Ok(out)
}
