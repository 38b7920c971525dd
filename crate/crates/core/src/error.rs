use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model could not be constructed from the given parameters.
    #[error("model construction error: {0}")]
    Model(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:.6e}, error bound {error:.3e}")]
    QuadratureNonConvergent { estimate: f64, error: f64 },

    /// An integral grew past any reasonable bound; treated as divergent.
    #[error("integral diverges: partial estimate {estimate:.6e}")]
    Divergent { estimate: f64 },

    /// Root bracketing failed for a monotone solve.
    #[error("bracketing failure: {0}")]
    Bracket(String),

    /// The operation requires a model regime that does not hold.
    #[error("regime mismatch: {0}")]
    Regime(String),

    /// Numerical evaluation failed at a specific point.
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
