//! Error type shared by every module.

use thiserror::Error;

/// Failures surfaced by the library.
///
/// Operations that are total on their stated domain return bare values;
/// everything that can signal (overflow, precision walls, statistics that do
/// not resolve) returns `Result<_, CoreError>`.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A matrix entry left the representable range (|entry| > 1e300).
    #[error("matrix exponential overflow: entry magnitude {magnitude:e} exceeds 1e300")]
    Overflow { magnitude: f64 },

    /// Drift-rate estimates at doubled horizons disagree.
    #[error("drift rate did not converge: estimates {first} and {second} differ beyond 1e-3 relative")]
    NonConvergence { first: f64, second: f64 },

    /// Determinant drifted too far before renormalization.
    #[error("precision loss: determinant drifted to {det}, beyond 1e-6 from 1")]
    PrecisionLoss { det: f64 },

    /// No primitive lattice vector close enough to the contracting line.
    #[error("no primitive vector within angle {max_angle} of the contracting line below norm {norm_bound}")]
    NoAlignedVector { max_angle: f64, norm_bound: f64 },

    /// Tail estimation ran out of events at the largest threshold.
    #[error("insufficient hits: largest threshold has {hits} hits, need at least {required}")]
    InsufficientHits { hits: usize, required: usize },

    /// Joint-probability estimation needs a larger ensemble.
    #[error("insufficient ensemble: {got} points, need at least {required}")]
    InsufficientEnsemble { got: usize, required: usize },

    /// Sum of event probabilities vanished.
    #[error("division by zero: sum of event probabilities is 0")]
    ZeroProbabilitySum,

    /// Floating-point continued-fraction expansion hit the precision wall.
    #[error("continued fraction precision wall after {terms} terms")]
    PrecisionWall { terms: usize },

    /// Limsup-exponent bracketing failed.
    #[error("inconclusive statistics: {reason}")]
    Inconclusive { reason: String },

    /// A precondition on arguments was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
