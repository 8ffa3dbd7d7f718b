//! Aligned multi-coin panel construction, min-max normalization and the
//! per-variable summary statistics.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use thiserror::Error;

use crate::market_data::OhlcvRecord;
use crate::num::RunningStats;

/// The six market variables tracked per coin-day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Open,
    High,
    Low,
    Close,
    Volume,
    MarketCap,
}

impl Variable {
    pub const ALL: [Variable; 6] = [
        Variable::Open,
        Variable::High,
        Variable::Low,
        Variable::Close,
        Variable::Volume,
        Variable::MarketCap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Open => "open",
            Variable::High => "high",
            Variable::Low => "low",
            Variable::Close => "close",
            Variable::Volume => "volume",
            Variable::MarketCap => "market_cap",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Variable::Open => 0,
            Variable::High => 1,
            Variable::Low => 2,
            Variable::Close => 3,
            Variable::Volume => 4,
            Variable::MarketCap => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("no input series")]
    EmptyInput,
    #[error("benchmark {0} is not among the input coins")]
    MissingBenchmark(String),
    #[error("calendar intersection of the input coins is empty")]
    EmptyIntersection,
    #[error("coin {0} has no observation at the start of the panel calendar; cannot forward-fill a leading gap")]
    LeadingGap(String),
    #[error("degenerate range: min equals max, nothing to normalize")]
    DegenerateRange,
    #[error("irregular series for {coin}: {detail}")]
    Irregular { coin: String, detail: String },
    #[error("non-positive value for {coin} {variable}; log returns undefined")]
    NonPositive {
        coin: String,
        variable: &'static str,
    },
    #[error("unknown coin {0}")]
    UnknownCoin(String),
}

/// One coin's history: a strictly increasing calendar and six parallel
/// value sequences.
#[derive(Debug, Clone)]
pub struct CoinSeries {
    coin: String,
    calendar: Vec<NaiveDate>,
    values: [Vec<f64>; 6],
}

impl CoinSeries {
    pub fn new(
        coin: impl Into<String>,
        calendar: Vec<NaiveDate>,
        values: [Vec<f64>; 6],
    ) -> Result<Self, SeriesError> {
        let coin = coin.into();
        for window in calendar.windows(2) {
            if window[0] >= window[1] {
                return Err(SeriesError::Irregular {
                    coin,
                    detail: format!("calendar not strictly increasing at {}", window[1]),
                });
            }
        }
        for (variable, sequence) in Variable::ALL.iter().zip(values.iter()) {
            if sequence.len() != calendar.len() {
                return Err(SeriesError::Irregular {
                    coin,
                    detail: format!(
                        "{} has {} values for {} calendar days",
                        variable.name(),
                        sequence.len(),
                        calendar.len()
                    ),
                });
            }
            if let Some(bad) = sequence.iter().find(|v| !v.is_finite()) {
                return Err(SeriesError::Irregular {
                    coin,
                    detail: format!("non-finite {} value {bad}", variable.name()),
                });
            }
        }
        Ok(Self {
            coin,
            calendar,
            values,
        })
    }

    /// Groups records by coin into per-coin series, sorted by date.
    /// Duplicate (coin, date) pairs are rejected.
    pub fn from_records(records: &[OhlcvRecord]) -> Result<Vec<CoinSeries>, SeriesError> {
        let mut grouped: BTreeMap<&str, BTreeMap<NaiveDate, &OhlcvRecord>> = BTreeMap::new();
        for record in records {
            if grouped
                .entry(record.coin.as_str())
                .or_default()
                .insert(record.date, record)
                .is_some()
            {
                return Err(SeriesError::Irregular {
                    coin: record.coin.clone(),
                    detail: format!("duplicate observation on {}", record.date),
                });
            }
        }
        grouped
            .into_iter()
            .map(|(coin, by_date)| {
                let calendar: Vec<NaiveDate> = by_date.keys().copied().collect();
                let pick = |f: fn(&OhlcvRecord) -> f64| by_date.values().map(|r| f(r)).collect();
                CoinSeries::new(
                    coin,
                    calendar,
                    [
                        pick(|r| r.open),
                        pick(|r| r.high),
                        pick(|r| r.low),
                        pick(|r| r.close),
                        pick(|r| r.volume),
                        pick(|r| r.market_cap),
                    ],
                )
            })
            .collect()
    }

    pub fn coin(&self) -> &str {
        &self.coin
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn len(&self) -> usize {
        self.calendar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calendar.is_empty()
    }

    pub fn values(&self, variable: Variable) -> &[f64] {
        &self.values[variable.index()]
    }
}

/// How to reconcile coins whose calendars differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    /// Keep only days present in every coin's calendar (the default: imputed
    /// values bias correlations upward).
    #[default]
    Intersect,
    /// Union calendar with per-coin forward fill; intended for charting.
    ForwardFill,
}

/// Immutable date-indexed tensor of all coins × six variables over a shared
/// calendar. Coins are ordered by descending mean market cap.
#[derive(Debug, Clone)]
pub struct AlignedPanel {
    calendar: Vec<NaiveDate>,
    coins: Vec<String>,
    benchmarks: Vec<String>,
    /// Layout: `[coin][variable][time]`, flattened.
    data: Vec<f64>,
}

pub const DEFAULT_BENCHMARKS: [&str; 2] = ["BTC", "ETH"];

/// Builds the aligned panel from per-coin series under the given gap policy.
pub fn align_panel(
    series: &[CoinSeries],
    policy: GapPolicy,
    benchmarks: &[String],
) -> Result<AlignedPanel, SeriesError> {
    if series.is_empty() {
        return Err(SeriesError::EmptyInput);
    }
    for benchmark in benchmarks {
        if !series.iter().any(|s| s.coin() == benchmark) {
            return Err(SeriesError::MissingBenchmark(benchmark.clone()));
        }
    }

    let calendar: Vec<NaiveDate> = match policy {
        GapPolicy::Intersect => {
            let mut shared: BTreeSet<NaiveDate> = series[0].calendar.iter().copied().collect();
            for s in &series[1..] {
                let other: BTreeSet<NaiveDate> = s.calendar.iter().copied().collect();
                shared = shared.intersection(&other).copied().collect();
            }
            if shared.is_empty() {
                return Err(SeriesError::EmptyIntersection);
            }
            shared.into_iter().collect()
        }
        GapPolicy::ForwardFill => {
            let mut union: BTreeSet<NaiveDate> = BTreeSet::new();
            for s in series {
                union.extend(s.calendar.iter().copied());
            }
            if union.is_empty() {
                return Err(SeriesError::EmptyIntersection);
            }
            union.into_iter().collect()
        }
    };

    let n = calendar.len();
    let mut aligned: Vec<(String, [Vec<f64>; 6])> = Vec::with_capacity(series.len());
    for s in series {
        let mut out: [Vec<f64>; 6] = Default::default();
        match policy {
            GapPolicy::Intersect => {
                let index: BTreeMap<NaiveDate, usize> = s
                    .calendar
                    .iter()
                    .copied()
                    .enumerate()
                    .map(|(i, d)| (d, i))
                    .collect();
                for (slot, seq) in out.iter_mut().zip(s.values.iter()) {
                    *slot = calendar.iter().map(|d| seq[index[d]]).collect();
                }
            }
            GapPolicy::ForwardFill => {
                if s.calendar.is_empty() || s.calendar[0] > calendar[0] {
                    return Err(SeriesError::LeadingGap(s.coin.clone()));
                }
                let index: BTreeMap<NaiveDate, usize> = s
                    .calendar
                    .iter()
                    .copied()
                    .enumerate()
                    .map(|(i, d)| (d, i))
                    .collect();
                for (slot, seq) in out.iter_mut().zip(s.values.iter()) {
                    let mut filled = Vec::with_capacity(n);
                    let mut last = seq[0];
                    for d in &calendar {
                        if let Some(&i) = index.get(d) {
                            last = seq[i];
                        }
                        filled.push(last);
                    }
                    *slot = filled;
                }
            }
        }
        aligned.push((s.coin.clone(), out));
    }

    // Descending mean market cap, ties broken by ticker.
    aligned.sort_by(|(coin_a, vals_a), (coin_b, vals_b)| {
        let mean_a = crate::num::mean(&vals_a[Variable::MarketCap.index()]);
        let mean_b = crate::num::mean(&vals_b[Variable::MarketCap.index()]);
        mean_b
            .partial_cmp(&mean_a)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| coin_a.cmp(coin_b))
    });

    let coins: Vec<String> = aligned.iter().map(|(c, _)| c.clone()).collect();
    let mut data = Vec::with_capacity(coins.len() * 6 * n);
    for (_, vals) in &aligned {
        for seq in vals {
            data.extend_from_slice(seq);
        }
    }

    Ok(AlignedPanel {
        calendar,
        coins,
        benchmarks: benchmarks.to_vec(),
        data,
    })
}

impl AlignedPanel {
    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn coins(&self) -> &[String] {
        &self.coins
    }

    pub fn benchmarks(&self) -> &[String] {
        &self.benchmarks
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn coin_index(&self, ticker: &str) -> Option<usize> {
        self.coins.iter().position(|c| c == ticker)
    }

    pub fn is_benchmark(&self, ticker: &str) -> bool {
        self.benchmarks.iter().any(|b| b == ticker)
    }

    pub fn series(&self, coin_idx: usize, variable: Variable) -> &[f64] {
        let n = self.n_days();
        let offset = (coin_idx * 6 + variable.index()) * n;
        &self.data[offset..offset + n]
    }

    /// Per-day mean of open/high/low/close: the "average price" used by the
    /// trend charts.
    pub fn ohlc_mean(&self, coin_idx: usize) -> Vec<f64> {
        let open = self.series(coin_idx, Variable::Open);
        let high = self.series(coin_idx, Variable::High);
        let low = self.series(coin_idx, Variable::Low);
        let close = self.series(coin_idx, Variable::Close);
        (0..self.n_days())
            .map(|t| (open[t] + high[t] + low[t] + close[t]) / 4.0)
            .collect()
    }

    /// Day-over-day log returns of every series; the calendar loses its
    /// first day. Errors if any value is non-positive.
    pub fn log_returns(&self) -> Result<AlignedPanel, SeriesError> {
        let n = self.n_days();
        if n < 2 {
            return Err(SeriesError::EmptyIntersection);
        }
        let mut data = Vec::with_capacity(self.coins.len() * 6 * (n - 1));
        for (coin_idx, coin) in self.coins.iter().enumerate() {
            for variable in Variable::ALL {
                let series = self.series(coin_idx, variable);
                for t in 1..n {
                    if series[t - 1] <= 0.0 || series[t] <= 0.0 {
                        return Err(SeriesError::NonPositive {
                            coin: coin.clone(),
                            variable: variable.name(),
                        });
                    }
                    data.push((series[t] / series[t - 1]).ln());
                }
            }
        }
        Ok(AlignedPanel {
            calendar: self.calendar[1..].to_vec(),
            coins: self.coins.clone(),
            benchmarks: self.benchmarks.clone(),
            data,
        })
    }
}

/// Min-max normalization onto [0, 1]. The minimum maps to 0 and the maximum
/// to 1; constant sequences have no range and are an error.
pub fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>, SeriesError> {
    if values.is_empty() {
        return Err(SeriesError::EmptyInput);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // also rejects NaN poisoning, which makes max/min incomparable
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return Err(SeriesError::DegenerateRange);
    }
    let range = max - min;
    Ok(values.iter().map(|v| (v - min) / range).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
}

/// Mean and sample standard deviation per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    per_variable: [VariableStats; 6],
}

impl SummaryStats {
    pub fn get(&self, variable: Variable) -> VariableStats {
        self.per_variable[variable.index()]
    }
}

/// Computes per-variable moments with a compensated online method.
pub fn summary_stats(series: &CoinSeries) -> SummaryStats {
    let mut per_variable = [VariableStats {
        mean: 0.0,
        std: 0.0,
    }; 6];
    for variable in Variable::ALL {
        let mut acc = RunningStats::new();
        for &v in series.values(variable) {
            acc.push(v);
        }
        per_variable[variable.index()] = VariableStats {
            mean: acc.mean(),
            std: acc.sample_std(),
        };
    }
    SummaryStats { per_variable }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(offset: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(offset)
    }

    fn flat_series(coin: &str, days: &[i64], level: f64) -> CoinSeries {
        let calendar: Vec<NaiveDate> = days.iter().map(|&d| day(d)).collect();
        let n = calendar.len();
        let seq = |scale: f64| -> Vec<f64> { (0..n).map(|i| level * scale + i as f64).collect() };
        CoinSeries::new(
            coin,
            calendar,
            [
                seq(1.0),
                seq(1.1),
                seq(0.9),
                seq(1.0),
                seq(100.0),
                seq(1000.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identical_calendars_align_unchanged() {
        let a = flat_series("BTC", &[0, 1, 2], 10.0);
        let b = flat_series("ETH", &[0, 1, 2], 5.0);
        let panel = align_panel(
            &[a.clone(), b],
            GapPolicy::Intersect,
            &["BTC".to_string(), "ETH".to_string()],
        )
        .unwrap();
        assert_eq!(panel.calendar(), a.calendar());
    }

    #[test]
    fn intersect_takes_shared_days() {
        let a = flat_series("BTC", &[0, 1, 2], 10.0);
        let b = flat_series("ETH", &[1, 2, 3], 5.0);
        let panel = align_panel(
            &[a, b],
            GapPolicy::Intersect,
            &["BTC".to_string(), "ETH".to_string()],
        )
        .unwrap();
        assert_eq!(panel.calendar(), &[day(1), day(2)]);
    }

    #[test]
    fn forward_fill_with_leading_gap_errors() {
        let a = flat_series("BTC", &[0, 1, 2], 10.0);
        let late = flat_series("LTC", &[1, 2], 1.0);
        let err =
            align_panel(&[a, late], GapPolicy::ForwardFill, &["BTC".to_string()]).unwrap_err();
        match err {
            SeriesError::LeadingGap(coin) => assert_eq!(coin, "LTC"),
            other => panic!("expected leading gap, got {other:?}"),
        }
    }

    #[test]
    fn forward_fill_carries_last_value() {
        let a = flat_series("BTC", &[0, 1, 2], 10.0);
        let gappy = CoinSeries::new(
            "LTC",
            vec![day(0), day(2)],
            [
                vec![1.0, 3.0],
                vec![1.0, 3.0],
                vec![1.0, 3.0],
                vec![1.0, 3.0],
                vec![1.0, 3.0],
                vec![1.0, 3.0],
            ],
        )
        .unwrap();
        let panel = align_panel(&[a, gappy], GapPolicy::ForwardFill, &["BTC".to_string()]).unwrap();
        let idx = panel.coin_index("LTC").unwrap();
        assert_eq!(panel.series(idx, Variable::Close), &[1.0, 1.0, 3.0]);
    }

    #[test]
    fn missing_benchmark_is_an_error() {
        let a = flat_series("LTC", &[0, 1], 1.0);
        let err = align_panel(&[a], GapPolicy::Intersect, &["BTC".to_string()]).unwrap_err();
        assert!(matches!(err, SeriesError::MissingBenchmark(t) if t == "BTC"));
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let a = flat_series("BTC", &[0, 1], 1.0);
        let b = flat_series("ETH", &[5, 6], 1.0);
        let err = align_panel(&[a, b], GapPolicy::Intersect, &["BTC".to_string()]).unwrap_err();
        assert!(matches!(err, SeriesError::EmptyIntersection));
    }

    #[test]
    fn coins_are_ordered_by_descending_market_cap() {
        let small = flat_series("AAA", &[0, 1], 1.0);
        let big = flat_series("BBB", &[0, 1], 100.0);
        let panel = align_panel(&[small, big], GapPolicy::Intersect, &["BBB".to_string()]).unwrap();
        assert_eq!(panel.coins(), &["BBB".to_string(), "AAA".to_string()]);
    }

    #[test]
    fn normalize_three_points() {
        assert_eq!(
            min_max_normalize(&[2.0, 4.0, 6.0]).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
    }

    #[test]
    fn normalize_is_idempotent_on_unit_extremes() {
        assert_eq!(min_max_normalize(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn normalize_constant_sequence_errors() {
        let err = min_max_normalize(&[5.0, 5.0, 5.0]).unwrap_err();
        assert!(matches!(err, SeriesError::DegenerateRange));
    }

    #[test]
    fn summary_constant_series_has_zero_std() {
        let series = CoinSeries::new(
            "C",
            vec![day(0), day(1), day(2)],
            [
                vec![4.0; 3],
                vec![4.0; 3],
                vec![4.0; 3],
                vec![4.0; 3],
                vec![4.0; 3],
                vec![4.0; 3],
            ],
        )
        .unwrap();
        let stats = summary_stats(&series);
        for variable in Variable::ALL {
            assert_eq!(stats.get(variable).mean, 4.0);
            assert_eq!(stats.get(variable).std, 0.0);
        }
    }

    #[test]
    fn summary_close_one_two_three() {
        let series = CoinSeries::new(
            "C",
            vec![day(0), day(1), day(2)],
            [
                vec![1.0, 2.0, 3.0],
                vec![1.0, 2.0, 3.0],
                vec![1.0, 2.0, 3.0],
                vec![1.0, 2.0, 3.0],
                vec![1.0, 2.0, 3.0],
                vec![1.0, 2.0, 3.0],
            ],
        )
        .unwrap();
        let stats = summary_stats(&series);
        assert!((stats.get(Variable::Close).mean - 2.0).abs() < 1e-15);
        assert!((stats.get(Variable::Close).std - 1.0).abs() < 1e-15);
    }

    #[test]
    fn from_records_rejects_duplicates() {
        let r = OhlcvRecord {
            date: day(0),
            coin: "BTC".into(),
            open: 1.0,
            high: 2.0,
            low: 0.5,
            close: 1.5,
            volume: 1.0,
            market_cap: 1.0,
        };
        let err = CoinSeries::from_records(&[r.clone(), r]).unwrap_err();
        assert!(matches!(err, SeriesError::Irregular { .. }));
    }

    #[test]
    fn log_returns_shrinks_calendar_by_one() {
        let a = flat_series("BTC", &[0, 1, 2], 10.0);
        let panel = align_panel(&[a], GapPolicy::Intersect, &["BTC".to_string()]).unwrap();
        let returns = panel.log_returns().unwrap();
        assert_eq!(returns.n_days(), 2);
        assert_eq!(returns.calendar(), &[day(1), day(2)]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalize_bounds_and_endpoints(
                mut values in proptest::collection::vec(-1e6f64..1e6, 2..200),
                bump in 1.0f64..100.0,
            ) {
                values[0] += bump; // guarantee a non-constant sequence
                let normalized = min_max_normalize(&values).unwrap();
                prop_assert!(normalized.iter().all(|v| (0.0..=1.0).contains(v)));
                prop_assert!(normalized.contains(&0.0));
                prop_assert!(normalized.contains(&1.0));
            }

            #[test]
            fn normalize_is_affine_invariant(
                mut values in proptest::collection::vec(-1e3f64..1e3, 2..100),
                scale in 0.01f64..100.0,
                shift in -1e3f64..1e3,
            ) {
                values[0] += 1.0;
                let base = min_max_normalize(&values).unwrap();
                let transformed: Vec<f64> = values.iter().map(|v| scale * v + shift).collect();
                let scaled = min_max_normalize(&transformed).unwrap();
                for (a, b) in base.iter().zip(scaled.iter()) {
                    prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
            }

            #[test]
            fn intersect_calendar_is_subset_of_inputs(
                offsets_a in proptest::collection::btree_set(0i64..30, 1..20),
                offsets_b in proptest::collection::btree_set(0i64..30, 1..20),
            ) {
                prop_assume!(offsets_a.intersection(&offsets_b).next().is_some());
                let a = flat_series("BTC", &offsets_a.iter().copied().collect::<Vec<_>>(), 2.0);
                let b = flat_series("ETH", &offsets_b.iter().copied().collect::<Vec<_>>(), 1.0);
                let cal_a: std::collections::BTreeSet<_> = a.calendar().iter().copied().collect();
                let cal_b: std::collections::BTreeSet<_> = b.calendar().iter().copied().collect();
                let panel = align_panel(
                    &[a, b],
                    GapPolicy::Intersect,
                    &["BTC".to_string()],
                ).unwrap();
                for d in panel.calendar() {
                    prop_assert!(cal_a.contains(d) && cal_b.contains(d));
                }
            }

            #[test]
            fn summary_matches_naive_two_pass(seed in 0u64..50) {
                let mut rng = crate::num::seeded_rng(seed);
                let values: Vec<f64> = (0..1000).map(|_| crate::num::randn(&mut rng) * 250.0 + 40.0).collect();
                let calendar: Vec<NaiveDate> = (0..1000).map(|i| day(i as i64)).collect();
                let series = CoinSeries::new(
                    "X",
                    calendar,
                    [
                        values.clone(), values.clone(), values.clone(),
                        values.clone(), values.clone(), values.clone(),
                    ],
                ).unwrap();
                let stats = summary_stats(&series).get(Variable::Close);
                // naive two-pass oracle
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (values.len() - 1) as f64;
                prop_assert!((stats.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
                prop_assert!((stats.std - var.sqrt()).abs() <= 1e-9 * var.sqrt().max(1.0));
            }
        }
    }
}
