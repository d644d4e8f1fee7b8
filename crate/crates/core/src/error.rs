use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or an invalid environment description.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The chain does not have a unique stationary distribution, or the
    /// linear system that defines it is numerically rank deficient.
    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    /// A post-condition on a computed matrix failed beyond tolerance.
    #[error("numerical conditioning error: {what} (residual {residual:.3e})")]
    Conditioning { what: String, residual: f64 },

    /// An iterative solver hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
