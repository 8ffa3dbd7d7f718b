//! Cryptocoin market analytics: OHLCV ingestion, aligned multi-coin panels,
//! sliding-window Pearson cross-correlation, SVG correlograms and trend charts,
//! plus a small forecasting toolkit (ARIMA/SARIMA estimation and gated
//! recurrent cells with gradient verification).
//!
//! Modules
//! - [`market_data`]: CSV/REST ingestion and dataset validation
//! - [`series`]: panel alignment, min-max normalization, summary statistics
//! - [`correlate`]: Pearson coefficients, sliding windows, correlation matrices
//! - [`render`]: deterministic SVG correlograms and trend charts
//! - [`forecast`]: differencing, ARIMA/SARIMA fitting, recurrent cells
//! - [`fixture`]: deterministic synthetic dataset at the reference scale (68 coins × 763 days)

pub mod correlate;
pub mod error;
pub mod fixture;
pub mod forecast;
pub mod market_data;
pub mod num;
pub mod render;
pub mod series;

pub use error::Error;
