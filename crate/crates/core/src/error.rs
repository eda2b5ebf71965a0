use thiserror::Error;

/// Errors produced by the trawl toolkit.
#[derive(Debug, Error)]
pub enum TrawlError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("cell budget exceeded: {cells} cells requested, limit {limit}; try n <= {suggested_n}")]
    Budget {
        cells: u128,
        limit: u128,
        suggested_n: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TrawlError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(TrawlError::Domain(msg.into()))
}
