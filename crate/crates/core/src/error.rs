use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("evaluation at a singular point: {0}")]
    Singular(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("component/parity mismatch: expected {expected}, got {got}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("quadrature did not converge after {refinements} refinements (error estimate {estimate:.3e})")]
    NoConvergence { refinements: usize, estimate: f64 },
    #[error("support violation: field magnitude {value:.3e} at the lateral boundary exceeds {tol:.3e}")]
    Support { value: f64, tol: f64 },
    #[error("mollifier radius {eps} is below grid spacing {h}")]
    Undersampled { eps: f64, h: f64 },
    #[error("io: {0}")]
    Io(String),
    #[error("malformed field file: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
