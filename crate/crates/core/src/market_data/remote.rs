//! REST client for OHLCV histories: `GET {base_url}/history?coin=…&start=…&end=…`
//! returning a JSON array of records in the same shape as the CSV schema.

use std::collections::BTreeSet;
use std::time::Duration;

use chrono::NaiveDate;

use super::{MarketDataError, OhlcvRecord};

/// Environment variable that overrides any configured API key.
pub const API_KEY_ENV: &str = "CRYPTOCORR_API_KEY";

const BACKOFF_BASE: Duration = Duration::from_millis(150);
pub const MAX_RETRIES_CAP: u32 = 10;

#[derive(Debug, Clone)]
pub struct RemoteSourceConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub request_timeout: Duration,
    pub max_retries: u32,
}

impl RemoteSourceConfig {
    pub fn new(
        base_url: impl Into<String>,
        api_key: Option<String>,
        request_timeout: Duration,
        max_retries: u32,
    ) -> Result<Self, MarketDataError> {
        if request_timeout.is_zero() {
            return Err(MarketDataError::BadConfig(
                "request_timeout must be > 0".into(),
            ));
        }
        if max_retries > MAX_RETRIES_CAP {
            return Err(MarketDataError::BadConfig(format!(
                "max_retries {max_retries} exceeds the cap of {MAX_RETRIES_CAP}"
            )));
        }
        Ok(Self {
            base_url: base_url.into(),
            api_key,
            request_timeout,
            max_retries,
        })
    }

    /// Effective API key: `CRYPTOCORR_API_KEY` wins over the configured one.
    pub fn resolved_api_key(&self) -> Option<String> {
        std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .or_else(|| self.api_key.clone())
    }
}

/// Fetches and validates one coin's history over a closed date interval.
/// Transient failures (5xx, 429, connection errors) are retried with
/// exponential backoff up to `max_retries`; other statuses are terminal.
pub fn fetch_remote(
    config: &RemoteSourceConfig,
    coin: &str,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<Vec<OhlcvRecord>, MarketDataError> {
    if start > end {
        return Err(MarketDataError::BadConfig(format!(
            "range start {start} is after range end {end}"
        )));
    }

    let url = format!(
        "{}/history?coin={}&start={}&end={}",
        config.base_url.trim_end_matches('/'),
        coin,
        start.format("%Y-%m-%d"),
        end.format("%Y-%m-%d"),
    );
    let agent = ureq::AgentBuilder::new()
        .timeout(config.request_timeout)
        .build();
    let api_key = config.resolved_api_key();

    let mut last_transient = String::new();
    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
        }
        let mut request = agent.get(&url);
        if let Some(key) = &api_key {
            request = request.set("X-Api-Key", key);
        }
        match request.call() {
            Ok(response) => {
                let body = response
                    .into_string()
                    .map_err(|e| MarketDataError::Decode(format!("unreadable body: {e}")))?;
                return decode_payload(&body);
            }
            Err(ureq::Error::Status(status, _)) if status == 429 || status >= 500 => {
                last_transient = format!("status {status}");
            }
            Err(ureq::Error::Status(status, response)) => {
                return Err(MarketDataError::Transport {
                    status: Some(status),
                    detail: response.status_text().to_string(),
                });
            }
            Err(ureq::Error::Transport(t)) => {
                last_transient = t.to_string();
            }
        }
    }
    Err(MarketDataError::RetryExhausted {
        attempts: config.max_retries + 1,
        detail: last_transient,
    })
}

/// Decodes the JSON payload and applies exactly the same record validation as
/// the CSV path: per-record invariants plus the duplicate (coin, date) check.
fn decode_payload(body: &str) -> Result<Vec<OhlcvRecord>, MarketDataError> {
    let records: Vec<OhlcvRecord> =
        serde_json::from_str(body).map_err(|e| MarketDataError::Decode(e.to_string()))?;
    let mut seen: BTreeSet<(String, NaiveDate)> = BTreeSet::new();
    for record in &records {
        record.validate()?;
        if !seen.insert((record.coin.clone(), record.date)) {
            return Err(MarketDataError::Duplicate {
                coin: record.coin.clone(),
                date: record.date,
            });
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_timeout() {
        let err = RemoteSourceConfig::new("http://x", None, Duration::ZERO, 1).unwrap_err();
        assert!(matches!(err, MarketDataError::BadConfig(_)));
    }

    #[test]
    fn rejects_excessive_retries() {
        let err =
            RemoteSourceConfig::new("http://x", None, Duration::from_secs(1), 11).unwrap_err();
        assert!(matches!(err, MarketDataError::BadConfig(_)));
    }

    #[test]
    fn rejects_inverted_range() {
        let config =
            RemoteSourceConfig::new("http://127.0.0.1:1", None, Duration::from_secs(1), 0).unwrap();
        let err = fetch_remote(
            &config,
            "BTC",
            NaiveDate::from_ymd_opt(2021, 1, 2).unwrap(),
            NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, MarketDataError::BadConfig(_)));
    }

    #[test]
    fn decode_names_missing_field() {
        let body = r#"[{"date":"2021-01-01","coin":"BTC","open":1.0,"high":2.0,"low":0.5,"volume":1.0,"market_cap":1.0}]"#;
        let err = decode_payload(body).unwrap_err();
        assert!(err.to_string().contains("close"), "got: {err}");
    }

    #[test]
    fn decode_applies_record_validation() {
        let body = r#"[{"date":"2021-01-01","coin":"BTC","open":1.0,"high":0.9,"low":0.5,"close":1.0,"volume":1.0,"market_cap":1.0}]"#;
        let err = decode_payload(body).unwrap_err();
        assert!(matches!(err, MarketDataError::Validation { .. }));
    }

    #[test]
    fn decode_rejects_duplicates() {
        let one = r#"{"date":"2021-01-01","coin":"BTC","open":1.0,"high":2.0,"low":0.5,"close":1.0,"volume":1.0,"market_cap":1.0}"#;
        let body = format!("[{one},{one}]");
        let err = decode_payload(&body).unwrap_err();
        assert!(matches!(err, MarketDataError::Duplicate { .. }));
    }
}
