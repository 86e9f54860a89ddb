use thiserror::Error;

/// Errors raised by the numerical routines and the CLI front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Bessel order {0}: order must exceed -1")]
    InvalidOrder(f64),

    #[error("argument {0} outside the domain: {1}")]
    Domain(String, String),

    #[error("sector violation: |arg z| = {phase} exceeds the admissible {limit}")]
    Sector { phase: f64, limit: f64 },

    #[error("overflow while assembling {0}")]
    Overflow(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at node {index} (x = {x})")]
    NonFinite { index: usize, x: f64 },

    #[error("point {x} lies outside the interpolation range [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient small-x resolution: {0}")]
    Resolution(String),

    #[error("parameters out of range: {0}")]
    OutOfRange(String),

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
