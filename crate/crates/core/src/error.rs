use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("an instance needs at least one item")]
    EmptyInstance,

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature missed tolerance {tolerance:e} (achieved error bound {achieved:e})")]
    Quadrature { tolerance: f64, achieved: f64 },

    #[error("exact evaluation unsupported: {0}")]
    Unsupported(String),

    #[error("outcome space has {size} (outcome, threshold) pairs; the enumeration bound is {bound}")]
    TooLarge { size: f64, bound: u64 },

    #[error("item {index} has an atom at threshold {tau}; use exact_evaluate for tie-aware evaluation")]
    AtomAtThreshold { index: usize, tau: f64 },

    #[error("root bracket failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of a numerical routine rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::Solver(_) | Error::TooLarge { .. }
        )
    }
}
