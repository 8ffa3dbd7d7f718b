//! Crate-wide error type aggregating the per-module error enums.

use thiserror::Error;

use crate::correlate::CorrelateError;
use crate::forecast::ForecastError;
use crate::market_data::MarketDataError;
use crate::render::RenderError;
use crate::series::SeriesError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Correlate(#[from] CorrelateError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Shell exit code convention: 1 for domain/validation failures,
    /// 2 for I/O and transport failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::MarketData(e) => e.exit_code(),
            _ => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
