use thiserror::Error;

/// Errors raised by every evaluator in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("insufficient precision: {0} target digits requested, at least 10 required")]
    InsufficientPrecision(u32),

    #[error("malformed number literal {0:?}")]
    Parse(String),

    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),

    /// A parameter lies outside the convergence domain of the requested series.
    #[error("{0}")]
    Domain(String),

    /// A denominator factor vanishes (or nearly vanishes) at working precision.
    #[error("pole: {0}")]
    Pole(String),

    #[error("series diverges: {0}")]
    Divergence(String),

    /// Accumulated rounding error exceeds the error budget of the context.
    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),

    #[error("no admissible parameter point for {0:?} after 1000 attempts")]
    DegenerateDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
