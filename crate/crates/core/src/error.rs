//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised by the physics kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the physical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// The coupling matrix makes at least one collective mode unstable.
    #[error("buckled layout: eigenvalue {eigenvalue} of G gives omega^2 = {omega_sq} < 0")]
    Buckled { eigenvalue: f64, omega_sq: f64 },

    /// A root or parameter search left its admissible interval.
    #[error("range error: {0}")]
    Range(String),

    /// Matrix or state dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Adaptive quadrature exhausted its evaluation budget.
    #[error("quadrature did not converge: value {value}, error estimate {error}, tolerance {tolerance}")]
    Convergence {
        value: f64,
        error: f64,
        tolerance: f64,
    },

    /// The effective Ising coupling vanishes, so gate quantities are undefined.
    #[error("no effective coupling between the addressed spins")]
    NoCoupling,

    /// Fock-space truncation is too small for the simulated dynamics.
    #[error("Fock truncation too small: tail population {tail:.3e} at dimension {dim}, try {suggested}")]
    Truncation {
        dim: usize,
        tail: f64,
        suggested: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
