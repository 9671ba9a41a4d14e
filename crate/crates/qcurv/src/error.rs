//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by the exact and numeric routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is defined but not supported at this argument.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A precondition on the input data is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The rewriting engine met a word above the truncation threshold that no
    /// rule covers.
    #[error("incomplete rule set: {0}")]
    IncompleteRuleSet(String),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureBudget {
        /// Error estimate actually achieved.
        achieved: f64,
        /// Tolerance that was requested.
        requested: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn incomplete_rule_set(msg: impl Into<String>) -> Self {
        Error::IncompleteRuleSet(msg.into())
    }
}
