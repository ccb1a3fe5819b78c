//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid mesh sizes, domain shapes or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function argument violated its contract (zero vector, dimension
    /// mismatch, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// An element with non-positive volume was encountered during assembly.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// A shifted interior block lost positive definiteness, i.e. the shift
    /// reached or exceeded the interior coercivity threshold.
    #[error("shift too large: {0}")]
    ShiftTooLarge(String),

    /// An iterative eigensolver did not reach its tolerance. Carries the best
    /// residual seen so the caller can decide whether to accept it.
    #[error("eigensolver did not converge within {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    /// Internal invariant violation; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
