//! Adaptive Dormand–Prince 5(4) integrator for small complex linear systems.

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State<const R: usize, const C: usize> = SMatrix<Complex64, R, C>;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the right-hand side when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, h_init: None, max_steps: 50_000_000 }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self::with_tol(1e-9)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn err_norm<const R: usize, const C: usize>(err: &State<R, C>, y0: &State<R, C>, y1: &State<R, C>, opts: &OdeOptions) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..R * C {
        let scale = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        let e = err[i].norm() / scale;
        if e.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(e);
    }
    worst
}

fn initial_step<const R: usize, const C: usize, F>(f: &F, t0: f64, y0: &State<R, C>, f0: &State<R, C>, span: f64, opts: &OdeOptions) -> f64
where
    F: Fn(f64, &State<R, C>) -> State<R, C>,
{
    let scaled = |v: &State<R, C>| {
        let mut s = 0.0;
        for i in 0..R * C {
            let sc = opts.atol + opts.rtol * y0[i].norm();
            s += (v[i].norm() / sc).powi(2);
        }
        (s / (R * C) as f64).sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = y0 + f0 * Complex64::from(h0);
    let f1 = f(t0 + h0, &y1);
    let d2 = scaled(&(f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `y' = f(t, y)` from `t0`, reporting the state at each of `samples`.
///
/// `samples` must be non-decreasing and not before `t0`. Steps are shortened
/// to land exactly on every sample time. `on_step` sees every accepted step.
pub fn integrate<const R: usize, const C: usize, F, S>(
    f: F,
    t0: f64,
    y0: State<R, C>,
    samples: &[f64],
    opts: &OdeOptions,
    mut on_step: S,
) -> Result<Vec<State<R, C>>>
where
    F: Fn(f64, &State<R, C>) -> State<R, C>,
    S: FnMut(f64, &State<R, C>),
{
    let mut out = Vec::with_capacity(samples.len());
    let Some(&t_end) = samples.last() else {
        return Ok(out);
    };
    if samples.windows(2).any(|w| w[1] < w[0]) || samples[0] < t0 {
        return Err(Error::Precondition("sample times must be sorted and start at or after t0".into()));
    }
    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = match opts.h_init {
        Some(h) => h,
        None if span > 0.0 => initial_step(&f, t0, &y, &k1, span, opts),
        None => 0.0,
    };
    on_step(t, &y);
    let mut next = 0;
    let mut steps = 0usize;
    let h_min = 1e-14 * span.max(t0.abs());
    while next < samples.len() {
        while next < samples.len() && samples[next] <= t {
            out.push(y);
            next += 1;
        }
        if next == samples.len() {
            break;
        }
        let target = samples[next];
        let remaining = target - t;
        let mut hs = h.min(remaining);
        // avoid leaving a sliver before the sample
        if remaining - hs < 1e-3 * hs {
            hs = remaining;
        }
        let c = |x: f64| Complex64::from(x * hs);
        let k2 = f(t + C2 * hs, &(y + k1 * c(A21)));
        let k3 = f(t + C3 * hs, &(y + k1 * c(A31) + k2 * c(A32)));
        let k4 = f(t + C4 * hs, &(y + k1 * c(A41) + k2 * c(A42) + k3 * c(A43)));
        let k5 = f(t + C5 * hs, &(y + k1 * c(A51) + k2 * c(A52) + k3 * c(A53) + k4 * c(A54)));
        let k6 = f(t + hs, &(y + k1 * c(A61) + k2 * c(A62) + k3 * c(A63) + k4 * c(A64) + k5 * c(A65)));
        let y_new = y + k1 * c(B1) + k3 * c(B3) + k4 * c(B4) + k5 * c(B5) + k6 * c(B6);
        let k7 = f(t + hs, &y_new);
        let err = k1 * c(E1) + k3 * c(E3) + k4 * c(E4) + k5 * c(E5) + k6 * c(E6) + k7 * c(E7);
        let mut en = err_norm(&err, &y, &y_new, opts);
        if !en.is_finite() || y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            en = f64::INFINITY;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration { t_last: t, reason: "step budget exhausted".into() });
        }
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        if en <= 1.0 {
            t = if hs == remaining { target } else { t + hs };
            y = y_new;
            k1 = k7;
            on_step(t, &y);
            // a sample-limited step says nothing about the achievable step
            if hs >= h {
                h = hs * factor;
            } else if factor < 1.0 {
                h = h.min(hs * factor);
            }
        } else {
            h = hs * factor.min(1.0);
        }
        if !h.is_finite() || h < h_min {
            return Err(Error::Integration { t_last: t, reason: format!("step size underflow (h = {h:e})") });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector1};

    #[test]
    fn exponential_decay() {
        let rate = 2.0;
        let y0 = Vector1::new(Complex64::new(1.0, 0.0));
        let samples: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let out = integrate(|_, y| y * Complex64::from(-rate), 0.0, y0, &samples, &OdeOptions::with_tol(1e-11), |_, _| {}).unwrap();
        for (t, y) in samples.iter().zip(&out) {
            assert!((y[0].re - (-rate * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_oscillator_phase() {
        // y' = i w y on a long interval keeps unit modulus
        let w = 50.0;
        let y0 = Vector1::new(Complex64::new(1.0, 0.0));
        let out = integrate(|_, y| y * Complex64::new(0.0, w), 0.0, y0, &[10.0], &OdeOptions::with_tol(1e-10), |_, _| {}).unwrap();
        let exact = Complex64::new(0.0, w * 10.0).exp();
        assert!((out[0][0] - exact).norm() < 1e-6, "{}", (out[0][0] - exact).norm());
    }

    #[test]
    fn matrix_state() {
        // fundamental matrix of a constant generator
        let a = Matrix2::new(Complex64::from(-1.0), Complex64::from(0.0), Complex64::from(0.0), Complex64::from(-3.0));
        let out = integrate(|_, y| a * y, 0.0, Matrix2::identity(), &[0.5], &OdeOptions::with_tol(1e-11), |_, _| {}).unwrap();
        assert!((out[0][(0, 0)].re - (-0.5f64).exp()).abs() < 1e-9);
        assert!((out[0][(1, 1)].re - (-1.5f64).exp()).abs() < 1e-9);
        assert!(out[0][(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn unsorted_samples_rejected() {
        let y0 = Vector1::new(Complex64::new(1.0, 0.0));
        assert!(integrate(|_, y| *y, 0.0, y0, &[1.0, 0.5], &OdeOptions::default(), |_, _| {}).is_err());
    }

    #[test]
    fn blow_up_reports_last_time() {
        // y' = y^2 style singularity through a time-dependent rate
        let y0 = Vector1::new(Complex64::new(1.0, 0.0));
        let r = integrate(|t, y| y * Complex64::from(1.0 / (1.0 - t).powi(2)), 0.0, y0, &[2.0], &OdeOptions::with_tol(1e-10), |_, _| {});
        match r {
            Err(Error::Integration { t_last, .. }) => assert!(t_last < 1.0 && t_last > 0.9),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
