use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument outside the domain of the physical model.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition on the inputs of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two spectra or data sets that must share a grid do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The spectral window exceeds the etalon free spectral range.
    #[error("aliasing: window of {window_ghz} GHz exceeds the free spectral range of {fsr_ghz} GHz")]
    Aliasing { window_ghz: f64, fsr_ghz: f64 },

    #[error("integration failed at t = {t_last:e} s: {reason}")]
    Integration { t_last: f64, reason: String },

    /// The linear system has no unique solution.
    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("not converged: {what} (residual {residual:e})")]
    NonConvergence { what: String, residual: f64 },

    #[error("Fock truncation not converged: last two values {previous} and {last}")]
    Truncation { previous: f64, last: f64 },

    /// Malformed numeric text input.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("rank deficient: {0}")]
    Rank(String),

    /// Failures collected while evaluating a sweep, tagged with their input index.
    #[error("{} of the sweep points failed (first at index {}: {})", .0.len(), .0[0].0, .0[0].1)]
    Sweep(Vec<(usize, Error)>),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Integration { .. }
            | Error::Degenerate(_)
            | Error::NonConvergence { .. }
            | Error::Truncation { .. } => true,
            Error::Sweep(items) => items.iter().any(|(_, e)| e.is_numerical()),
            _ => false,
        }
    }
}

/// Collects per-index results, preserving the order of successes.
pub(crate) fn collect_indexed<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push((i, e)),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(Error::Sweep(failed))
    }
}
