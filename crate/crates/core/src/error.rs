use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("imaginary frequency at k = {k}: omega^2 = {omega_sq}")]
    ImaginaryFrequency { k: f64, omega_sq: f64 },
    #[error("trajectory diverged after t = {last_finite_time} (time step too large?)")]
    Divergence { last_finite_time: f64 },
    #[error("insufficient data: {usable} usable rows, at least {required} required")]
    InsufficientData { usable: usize, required: usize },
    #[error("no dynamics: all quadratic coefficients vanish")]
    NoDynamics,
    #[error("time mismatch: reference has no data at t = {0}")]
    TimeMismatch(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
