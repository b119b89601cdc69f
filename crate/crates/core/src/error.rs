use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the gamma function at x = {0}")]
    Pole(f64),

    #[error("series did not converge after {terms} terms (last relative term {last:e})")]
    NonConvergence { terms: usize, last: f64 },

    #[error("boundary data has no derivative channel and spectral fallback is disabled")]
    MissingDerivative,

    #[error("polar derivatives are undefined at the origin")]
    Origin,

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("at least {needed} cutoffs/radii are required, got {got}")]
    InsufficientCutoffs { needed: usize, got: usize },

    #[error("empty grid")]
    EmptyGrid,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
