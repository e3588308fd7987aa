use std::path::PathBuf;

/// Errors produced anywhere in the decision-making pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error("dimension mismatch: {what} has {found}, expected {expected}")]
    Dimension { what: &'static str, found: usize, expected: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{value} lies outside the support {support}")]
    OutOfSupport { value: f64, support: &'static str },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("MCMC did not converge: R-hat {rhat:.4} on marginal {marginal}")]
    NonConvergence { marginal: usize, rhat: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
