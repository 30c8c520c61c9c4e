use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("state has {got} sites but the lattice has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("expected a {expected} state")]
    WrongKind { expected: &'static str },
    #[error("state space of {states} states exceeds the cap of {cap}")]
    StateCapExceeded { states: u128, cap: usize },
    #[error("generator is reducible: {reached} of {states} states reachable")]
    Reducible { reached: usize, states: usize },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
