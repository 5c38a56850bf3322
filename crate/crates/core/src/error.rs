//! Error type shared by all solver modules.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by distribution calculus, mechanism assembly and solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A probe or parameter lies outside the mathematical domain of the
    /// operation (quantile outside `[0,1]`, reversed integration bounds,
    /// value outside the support, elasticity at or below one, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for this input family (density of a
    /// discrete distribution, full-disclosure benchmark of a discrete value
    /// distribution, exhaustive enumeration beyond the size cap).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Construction-time validation failure (malformed knots, unsorted
    /// atoms, breakpoints not strictly increasing, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A partition that cannot be turned into a menu, e.g. because pooled
    /// expected values fail to be strictly increasing.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// Internal consistency failure: independently computed quantities that
    /// must agree (the profit accounting identities) did not. Signals a bug
    /// in mechanism assembly rather than bad user input.
    #[error("internal consistency failure: {0}")]
    Internal(String),
}
