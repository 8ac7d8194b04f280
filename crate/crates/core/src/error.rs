use thiserror::Error;

/// Errors produced by the distribution, estimation, and charting code.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violates its domain (non-positive shape, bad support, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The support normalizer underflowed; the distribution carries no
    /// representable mass on [a, b].
    #[error("degenerate support: normalizer underflow on [{a}, {b}]")]
    DegenerateSupport { a: f64, b: f64 },

    /// The data cannot identify the parameters (e.g. zero variance).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// An iterative method exhausted its iteration cap.
    #[error("convergence failure: {0}")]
    Convergence(String),
}
