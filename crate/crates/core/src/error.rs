use crate::C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("pole in {what} at {at}")]
    Pole { what: &'static str, at: C64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("root subdivision failed: {0}")]
    Subdivision(String),
    #[error("degenerate roots: {0}")]
    Degeneracy(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("gauge guard violated: {0}")]
    GaugeGuard(String),
    #[error("singular prefactor: {0}")]
    SingularPrefactor(String),
    #[error("sum rule violated: {0}")]
    SumRule(String),
}

impl Error {
    /// True for errors that stem from numerics rather than bad input.
    pub fn is_numeric(&self) -> bool {
        !matches!(self, Error::Domain(_) | Error::Unsupported(_) | Error::Capacity(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
