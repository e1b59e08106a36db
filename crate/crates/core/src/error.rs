use thiserror::Error;

/// Errors raised by the measure, sampler, integrator and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mutually incompatible configuration (e.g. sampler method vs. measure kind).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(usize),

    /// A numerical self-check failed (e.g. the stable scale constant disagrees with quadrature).
    #[error("calibration check failed: {0}")]
    Calibration(String),

    /// Too many simulated paths became non-finite.
    #[error("{invalid} of {total} paths became non-finite (limit 0.1%)")]
    InvalidPaths { invalid: usize, total: usize },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("malformed binary file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
