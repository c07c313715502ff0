use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time must be nonnegative and finite, got {0}")]
    InvalidTime(f64),
    #[error("(t, s) = ({t}, {s}) is outside the domain t >= s >= 0")]
    OutsideDomain { t: f64, s: f64 },
    #[error("grid must contain at least one point")]
    EmptyGrid,
    #[error("invalid growth rate: {0}")]
    InvalidRate(String),
    #[error(
        "ill-conditioned projector at t = {time}: singular value {value:.3e} falls in the \
         ambiguous band around the rank threshold {threshold:.3e}"
    )]
    IllConditionedProjector {
        time: f64,
        value: f64,
        threshold: f64,
    },
    #[error("projector family {family} is not strongly invariant over ({t}, {s}): {reason}")]
    NotStronglyInvariant {
        family: usize,
        t: f64,
        s: f64,
        reason: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "rate expression is unbalanced for h{0}: the exponent at t must equal the negated \
         exponent at s"
    )]
    UnbalancedExpression(usize),
    #[error("projectors do not form an orthogonal partition: {0}")]
    OrthogonalityViolation(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
