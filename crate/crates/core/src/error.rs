use thiserror::Error;

/// Errors produced by the noise models, filter design, estimators and experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    /// A frequency sits at or above the Nyquist limit.
    #[error("{what} = {freq_hz} Hz violates the Nyquist bound for fs = {sample_rate_hz} Hz")]
    Nyquist {
        what: &'static str,
        freq_hz: f64,
        sample_rate_hz: f64,
    },

    /// The record does not span enough whole periods of the known signal.
    #[error("record too short: {periods} whole periods available, {required} required")]
    RecordTooShort { periods: usize, required: usize },

    #[error("non-finite input sample at index {0}")]
    NonFinite(usize),

    /// An iterative numerical method failed to reach its tolerance.
    #[error("{0} did not converge")]
    Convergence(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        name,
        reason: reason.into(),
    }
}

/// Returns an error unless `value` is finite and `>= 0`.
pub(crate) fn ensure_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(domain(
            name,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}

/// Returns an error unless `value` is finite and `> 0`.
pub(crate) fn ensure_pos(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(name, format!("must be finite and > 0, got {value}")))
    }
}
