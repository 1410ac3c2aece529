use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("principal square root is undefined on the negative real axis (argument {0})")]
    BranchCut(f64),

    #[error("lambda = {re}{im:+}i lies within 1e-9 of the spectrum [-{rho}, {rho}]")]
    Spectrum { re: f64, im: f64, rho: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate quadratic: discriminant {0:e} is numerically zero")]
    Degenerate(f64),

    #[error("operation requires |lambda| > rho, got |lambda| = {modulus} <= {rho}")]
    Regime { modulus: f64, rho: f64 },

    #[error("no threshold radius found below {0}")]
    Threshold(usize),

    #[error("domain exhausted: {0}")]
    DomainExhausted(String),

    #[error("vertex outside domain: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
