use thiserror::Error;

/// Errors surfaced by the optimization library.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix was constructed or consumed with an impossible size.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `‖w_i‖²` fell below the degenerate threshold; the caller should
    /// substitute a zero redundancy rate (and a zero gradient).
    #[error("degenerate beamformer for user {user}: ‖w‖² = {norm_sq:.3e}")]
    DegenerateBeam { user: usize, norm_sq: f64 },

    /// A numerical procedure failed (bracket expansion, zero-vector
    /// projection, non-finite intermediate value).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A metric was called with a missing or superfluous auxiliary variable,
    /// or with inconsistent box bounds.
    #[error("interface error: {0}")]
    Interface(String),

    /// A scenario or config file could not be parsed or failed validation.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
