//! Acquisition, parsing and validation of CoinMarketCap-style OHLCV histories.
//!
//! The on-disk format is a long CSV, one row per coin-day:
//! `date,coin,open,high,low,close,volume,market_cap` with ISO-8601 dates,
//! `.` decimal points and no thousands separators.

mod remote;

pub use remote::{fetch_remote, RemoteSourceConfig, API_KEY_ENV};

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};

use chrono::NaiveDate;
use thiserror::Error;

/// Expected CSV header, in column order.
pub const CSV_HEADER: &str = "date,coin,open,high,low,close,volume,market_cap";

const COLUMNS: [&str; 8] = [
    "date",
    "coin",
    "open",
    "high",
    "low",
    "close",
    "volume",
    "market_cap",
];

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {detail}")]
    Row { line: usize, detail: String },
    #[error("invalid record for {coin} on {date}: {detail}")]
    Validation {
        coin: String,
        date: NaiveDate,
        detail: String,
    },
    #[error("duplicate record for {coin} on {date}")]
    Duplicate { coin: String, date: NaiveDate },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("transport error{}: {detail}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, detail: String },
    #[error("decode error: {0}")]
    Decode(String),
    #[error("retry budget exhausted after {attempts} attempts: {detail}")]
    RetryExhausted { attempts: u32, detail: String },
    #[error("invalid remote configuration: {0}")]
    BadConfig(String),
}

impl MarketDataError {
    pub fn exit_code(&self) -> i32 {
        match self {
            MarketDataError::Io(_)
            | MarketDataError::Transport { .. }
            | MarketDataError::RetryExhausted { .. } => 2,
            _ => 1,
        }
    }
}

/// One coin-day observation holding the six tracked market variables.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OhlcvRecord {
    pub date: NaiveDate,
    pub coin: String,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
    pub market_cap: f64,
}

impl OhlcvRecord {
    /// Checks finiteness, non-negativity and the high/low envelope.
    pub fn validate(&self) -> Result<(), MarketDataError> {
        let fields = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
            ("volume", self.volume),
            ("market_cap", self.market_cap),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(self.invalid(format!("{name} is not finite")));
            }
            if value < 0.0 {
                return Err(self.invalid(format!("{name} is negative ({value})")));
            }
        }
        self.check_envelope()
    }

    fn check_envelope(&self) -> Result<(), MarketDataError> {
        if self.low > self.high {
            return Err(self.invalid(format!("low {} exceeds high {}", self.low, self.high)));
        }
        if self.low > self.open.min(self.close) {
            return Err(self.invalid(format!(
                "low {} exceeds min(open, close) {}",
                self.low,
                self.open.min(self.close)
            )));
        }
        if self.high < self.open.max(self.close) {
            return Err(self.invalid(format!(
                "high {} is below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            )));
        }
        Ok(())
    }

    fn invalid(&self, detail: String) -> MarketDataError {
        MarketDataError::Validation {
            coin: self.coin.clone(),
            date: self.date,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Downgrade high/low envelope violations to warnings instead of errors.
    /// Negative or non-finite values stay fatal in both modes.
    pub lenient: bool,
}

#[derive(Debug, Default)]
pub struct ParsedCsv {
    pub records: Vec<OhlcvRecord>,
    pub warnings: Vec<String>,
}

/// Strict CSV parse: schema, per-cell and record validation all enforced.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<OhlcvRecord>, MarketDataError> {
    parse_csv_opts(input, ParseOptions::default()).map(|parsed| parsed.records)
}

/// CSV parse with an explicit strict/lenient choice; lenient mode collects
/// envelope violations as warnings.
pub fn parse_csv_opts<R: Read>(input: R, opts: ParseOptions) -> Result<ParsedCsv, MarketDataError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => {
            return Err(MarketDataError::Schema(
                "input is empty, header expected".into(),
            ))
        }
    };
    check_header(normalize_line(&header))?;

    let mut parsed = ParsedCsv::default();
    let mut seen: BTreeSet<(String, NaiveDate)> = BTreeSet::new();

    for (idx, line) in lines {
        let line = line?;
        let line = normalize_line(&line);
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1; // 1-based, header is line 1
        let record = parse_row(line, line_no)?;
        if !seen.insert((record.coin.clone(), record.date)) {
            return Err(MarketDataError::Duplicate {
                coin: record.coin,
                date: record.date,
            });
        }
        match record.validate() {
            Ok(()) => parsed.records.push(record),
            Err(err @ MarketDataError::Validation { .. }) => {
                if opts.lenient && is_envelope_only_violation(&record) {
                    parsed.warnings.push(err.to_string());
                    parsed.records.push(record);
                } else {
                    return Err(err);
                }
            }
            Err(err) => return Err(err),
        }
    }
    Ok(parsed)
}

/// True when the record's numeric fields are sane and only the
/// high/low envelope is broken.
fn is_envelope_only_violation(record: &OhlcvRecord) -> bool {
    let values = [
        record.open,
        record.high,
        record.low,
        record.close,
        record.volume,
        record.market_cap,
    ];
    values.iter().all(|v| v.is_finite() && *v >= 0.0) && record.check_envelope().is_err()
}

fn normalize_line(line: &str) -> &str {
    line.strip_suffix('\r')
        .unwrap_or(line)
        .trim_end_matches('\u{feff}')
}

fn check_header(header: &str) -> Result<(), MarketDataError> {
    let header = header.strip_prefix('\u{feff}').unwrap_or(header);
    if header == CSV_HEADER {
        return Ok(());
    }
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    let missing: Vec<&str> = COLUMNS
        .iter()
        .filter(|c| !got.contains(c))
        .copied()
        .collect();
    let unknown: Vec<&str> = got
        .iter()
        .filter(|c| !COLUMNS.contains(c))
        .copied()
        .collect();
    let mut parts = Vec::new();
    if !missing.is_empty() {
        parts.push(format!("missing column(s): {}", missing.join(", ")));
    }
    if !unknown.is_empty() {
        parts.push(format!("unknown column(s): {}", unknown.join(", ")));
    }
    if parts.is_empty() {
        parts.push(format!("columns out of order, expected `{CSV_HEADER}`"));
    }
    Err(MarketDataError::Schema(parts.join("; ")))
}

fn parse_row(line: &str, line_no: usize) -> Result<OhlcvRecord, MarketDataError> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != COLUMNS.len() {
        return Err(MarketDataError::Row {
            line: line_no,
            detail: format!("expected {} fields, found {}", COLUMNS.len(), cells.len()),
        });
    }
    let date = NaiveDate::parse_from_str(cells[0].trim(), "%Y-%m-%d").map_err(|e| {
        MarketDataError::Row {
            line: line_no,
            detail: format!("unparseable date `{}`: {e}", cells[0]),
        }
    })?;
    let coin = cells[1].trim();
    if coin.is_empty() {
        return Err(MarketDataError::Row {
            line: line_no,
            detail: "empty coin ticker".into(),
        });
    }
    let mut numbers = [0.0f64; 6];
    for (slot, (cell, column)) in numbers
        .iter_mut()
        .zip(cells[2..].iter().zip(COLUMNS[2..].iter()))
    {
        *slot = cell
            .trim()
            .parse::<f64>()
            .map_err(|e| MarketDataError::Row {
                line: line_no,
                detail: format!("unparseable {column} `{cell}`: {e}"),
            })?;
    }
    Ok(OhlcvRecord {
        date,
        coin: coin.to_string(),
        open: numbers[0],
        high: numbers[1],
        low: numbers[2],
        close: numbers[3],
        volume: numbers[4],
        market_cap: numbers[5],
    })
}

/// Writes records back out in the canonical CSV schema. `parse_csv` of the
/// output reproduces the input records exactly.
pub fn serialize_csv<W: Write>(records: &[OhlcvRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.date.format("%Y-%m-%d"),
            r.coin,
            r.open,
            r.high,
            r.low,
            r.close,
            r.volume,
            r.market_cap
        )?;
    }
    Ok(())
}

/// Structural summary of a record set: counts, date range and per-coin gaps
/// against the full daily calendar of the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetReport {
    pub coin_count: usize,
    /// Modal per-coin step count (ties resolved toward the larger count).
    pub step_count: usize,
    pub total_observations: usize,
    pub date_range: Option<(NaiveDate, NaiveDate)>,
    /// Coins missing at least one day of the dataset calendar, with the
    /// number of missing days.
    pub coins_with_gaps: Vec<(String, usize)>,
}

/// Counts coins, steps and calendar gaps. Gaps are reported, never fatal.
pub fn validate_dataset(records: &[OhlcvRecord]) -> DatasetReport {
    if records.is_empty() {
        return DatasetReport {
            coin_count: 0,
            step_count: 0,
            total_observations: 0,
            date_range: None,
            coins_with_gaps: Vec::new(),
        };
    }

    let mut per_coin: BTreeMap<&str, BTreeSet<NaiveDate>> = BTreeMap::new();
    let mut min_date = records[0].date;
    let mut max_date = records[0].date;
    for r in records {
        per_coin.entry(r.coin.as_str()).or_default().insert(r.date);
        min_date = min_date.min(r.date);
        max_date = max_date.max(r.date);
    }

    let calendar_len = (max_date - min_date).num_days() as usize + 1;

    let mut count_freq: BTreeMap<usize, usize> = BTreeMap::new();
    for dates in per_coin.values() {
        *count_freq.entry(dates.len()).or_insert(0) += 1;
    }
    let step_count = count_freq
        .iter()
        .max_by_key(|(count, freq)| (**freq, **count))
        .map(|(count, _)| *count)
        .unwrap_or(0);

    let coins_with_gaps: Vec<(String, usize)> = per_coin
        .iter()
        .filter_map(|(coin, dates)| {
            let missing = calendar_len - dates.len();
            (missing > 0).then(|| (coin.to_string(), missing))
        })
        .collect();

    DatasetReport {
        coin_count: per_coin.len(),
        step_count,
        total_observations: records.len(),
        date_range: Some((min_date, max_date)),
        coins_with_gaps,
    }
}
