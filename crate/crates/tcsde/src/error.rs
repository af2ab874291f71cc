//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Invalid parameter or configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two-path operation invoked on paths with different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A time or value was requested beyond the covered horizon
    /// (generalized inverses are defined only up to sup of the
    /// forward path; see the explosion-time restriction).
    #[error("horizon exceeded: requested {requested}, available {available}")]
    HorizonExceeded { requested: f64, available: f64 },

    /// Operation not defined for this input class.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Numerical solution left the finite range.
    #[error("divergent solution at step {step} (t = {t}): state = {value}")]
    Divergence { step: usize, t: f64, value: f64 },

    /// Matrix fundamental solution too close to singular.
    #[error("near-singular fundamental solution: condition number {cond:.3e} at step {step}")]
    NearSingular { cond: f64, step: usize },

    /// Argument outside the supported domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or expansion could not reach the requested tolerance.
    #[error("accuracy not reached: achieved {achieved:.3e}, requested {requested:.3e}")]
    Accuracy { achieved: f64, requested: f64 },

    /// Fundamental solution underflowed; coefficients are pathological.
    #[error("scaling error: fundamental solution underflow ({0})")]
    Scaling(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
