//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is malformed or non-finite.
    #[error("input error: {0}")]
    Input(String),
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// An experiment or grid is configured inconsistently.
    #[error("configuration error: {0}")]
    Config(String),
    /// A hypothesis required by an estimate does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// An integral over an unbounded region diverges.
    #[error("divergent integral: {0}")]
    Divergent(String),
    /// A quadrature did not reach its tolerance.
    #[error("quadrature did not converge: estimated error {error:e} for value {value:e}")]
    NoConvergence {
        /// Best available value.
        value: f64,
        /// Error estimate at termination.
        error: f64,
    },
    /// A periodic field carries too much mass near the box boundary.
    #[error("wrap-around at t = {t}: boundary mass ratio {ratio:e} exceeds {limit:e}")]
    WrapAround {
        /// Time at which the guard failed.
        t: f64,
        /// Measured boundary mass ratio.
        ratio: f64,
        /// Admissible ratio.
        limit: f64,
    },
    /// The guard fails inside the requested horizon.
    #[error("horizon truncated: guard violated at t = {t}, max safe t = {max_safe_t}")]
    HorizonTruncated {
        /// First sampled time at which the guard failed.
        t: f64,
        /// Largest time at which the guard still holds.
        max_safe_t: f64,
    },
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
