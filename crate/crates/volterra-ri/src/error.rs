use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An evaluation was requested outside the mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative computation failed to reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Sequence lengths do not match the grid they claim to live on.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A claim-size family cannot match the requested moment pair.
    #[error("moment fit infeasible: {0}")]
    MomentFit(String),

    /// The Riccati solution left the global-existence region.
    #[error("no global solution: blow-up near t = {t:.6}")]
    BlowUp { t: f64 },

    /// A quantity violated an identity it is guaranteed to satisfy.
    #[error("internal consistency violation: {0}")]
    Consistency(String),

    /// The grid is too coarse (or does not cover the window) for the request.
    #[error("grid resolution insufficient: {0}")]
    Resolution(String),

    /// Configuration file rejected; `line` is 1-based.
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
