//! Phonon cooling by the optical drive.
//!
//! [`rate`] holds the dressed-state analytics and their extraction from
//! spectra; [`lindblad`] solves the quantized emitter–phonon master equation.

pub mod lindblad;
pub mod rate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Frequency;

pub use lindblad::{cooling_performance_map, lindblad_steady_state, LindbladConfig, SteadyStateResult};
pub use rate::{
    cooling_map, cooling_rate_closed_form, cooling_rate_from_spectrum, cooling_rate_from_table, CoolingMap, CoolingPoint,
    SidebandExtraction,
};

/// Rectangular (Δ, Ω_L) grid; point `(i_rabi, i_delta)` is stored at
/// `i_rabi * deltas.len() + i_delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    pub deltas: Vec<Frequency>,
    pub rabis: Vec<Frequency>,
}

impl MapGrid {
    pub fn new(deltas: Vec<Frequency>, rabis: Vec<Frequency>) -> Result<Self> {
        if deltas.is_empty() || rabis.is_empty() {
            return Err(Error::Precondition("empty map grid".into()));
        }
        Ok(MapGrid { deltas, rabis })
    }

    /// `n_delta` detunings over `[d_lo, d_hi]` and `n_rabi` Rabi frequencies over `[r_lo, r_hi]`, inclusive.
    pub fn linspace(d_lo: Frequency, d_hi: Frequency, n_delta: usize, r_lo: Frequency, r_hi: Frequency, n_rabi: usize) -> Result<Self> {
        let axis = |lo: Frequency, hi: Frequency, n: usize| -> Result<Vec<Frequency>> {
            match n {
                0 => Err(Error::Precondition("empty map axis".into())),
                1 => Ok(vec![lo]),
                _ => Ok((0..n).map(|i| lo + (hi - lo) * (i as f64 / (n - 1) as f64)).collect()),
            }
        };
        Self::new(axis(d_lo, d_hi, n_delta)?, axis(r_lo, r_hi, n_rabi)?)
    }

    pub fn len(&self) -> usize {
        self.deltas.len() * self.rabis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i_rabi: usize, i_delta: usize) -> usize {
        i_rabi * self.deltas.len() + i_delta
    }

    /// `(Δ, Ω_L)` of every point in storage order.
    pub fn points(&self) -> Vec<(Frequency, Frequency)> {
        self.rabis.iter().flat_map(|r| self.deltas.iter().map(move |d| (*d, *r))).collect()
    }
}
