//! Deterministic synthetic OHLCV dataset at the reference scale of the
//! analysis: 68 coins over the 763 days from 2019-12-24 to 2022-01-24 (51884
//! observations, complete panel).
//!
//! Construction notes:
//! - Every coin's four price variables are transforms of one latent
//!   geometric path, so the OHLC envelope holds by construction.
//! - The top-5 coins (BTC, ETH, BNB, XRP, ADA) are affinely rescaled per
//!   variable so their sample means and standard deviations land on the
//!   calibration targets exactly; affine maps leave Pearson
//!   correlations untouched.
//! - Non-stable alt-coins share a market factor with the benchmarks, so
//!   their cross-correlations are strongly positive on every timeframe.
//! - Stablecoins hover around 1 USD with mean-reverting, market-independent
//!   noise in all six variables, keeping their correlations near zero.

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::market_data::{MarketDataError, OhlcvRecord};
use crate::num::{randn, seeded_rng, RunningStats};

/// Seed of the canonical bundled fixture.
pub const FIXTURE_SEED: u64 = 42;

pub const COIN_COUNT: usize = 68;
pub const STEP_COUNT: usize = 763;

pub const STABLECOINS: [&str; 6] = ["USDP", "TUSD", "DAI", "BUSD", "USDC", "USDT"];

/// The five coins whose summary statistics are pinned by the calibration
/// table.
pub const TOP5: [&str; 5] = ["BTC", "ETH", "BNB", "XRP", "ADA"];

const GENERIC_ALTS: [&str; 57] = [
    "LTC", "DOGE", "DOT", "SOL", "LINK", "MATIC", "XLM", "ETC", "VET", "TRX", "FIL", "AVAX",
    "ATOM", "XTZ", "ALGO", "AAVE", "EOS", "MKR", "COMP", "SNX", "SUSHI", "YFI", "UNI", "CRV",
    "BAT", "ZRX", "KNC", "ENJ", "MANA", "SAND", "GRT", "CHZ", "HOT", "ONE", "ZIL", "ICX", "QTUM",
    "OMG", "NANO", "DGB", "SC", "ZEN", "RVN", "KAVA", "BAND", "REN", "LRC", "OCEAN", "SKL", "ANKR",
    "STORJ", "CVC", "NMR", "OXT", "BAL", "UMA", "KSM",
];

/// Per-variable (mean, std) calibration targets in USD for the top-5 coins.
struct CalibrationRow {
    coin: &'static str,
    open: (f64, f64),
    high: (f64, f64),
    low: (f64, f64),
    close: (f64, f64),
    volume: (f64, f64),
    market_cap: (f64, f64),
    /// Exponential trend strength of the latent price path.
    trend: f64,
}

const K: f64 = 1e3;
const B: f64 = 1e9;

const CALIBRATION: [CalibrationRow; 5] = [
    CalibrationRow {
        coin: "BTC",
        open: (29.39 * K, 19.55 * K),
        high: (30.18 * K, 20.07 * K),
        low: (28.50 * K, 18.92 * K),
        close: (29.42 * K, 19.53 * K),
        volume: (39.63 * B, 20.41 * B),
        market_cap: (550.41 * B, 368.54 * B),
        trend: 5.0,
    },
    CalibrationRow {
        coin: "ETH",
        open: (1.57 * K, 1.44 * K),
        high: (1.63 * K, 1.49 * K),
        low: (1.51 * K, 1.39 * K),
        close: (1.57 * K, 1.44 * K),
        volume: (20.48 * B, 11.05 * B),
        market_cap: (184.19 * B, 170.90 * B),
        trend: 5.3,
    },
    CalibrationRow {
        coin: "BNB",
        open: (0.20 * K, 0.21 * K),
        high: (0.21 * K, 0.22 * K),
        low: (0.19 * K, 0.20 * K),
        close: (0.20 * K, 0.21 * K),
        volume: (1.63 * B, 1.91 * B),
        market_cap: (33.18 * B, 35.39 * B),
        trend: 5.6,
    },
    CalibrationRow {
        coin: "XRP",
        open: (5.64e-4 * K, 3.94e-4 * K),
        high: (5.90e-4 * K, 4.17e-4 * K),
        low: (5.36e-4 * K, 3.68e-4 * K),
        close: (5.64e-4 * K, 3.94e-4 * K),
        volume: (4.59 * B, 4.91 * B),
        market_cap: (25.70 * B, 17.96 * B),
        trend: 4.6,
    },
    CalibrationRow {
        coin: "ADA",
        open: (7.97e-4 * K, 8.21e-4 * K),
        high: (8.33e-4 * K, 8.55e-4 * K),
        low: (7.60e-4 * K, 7.84e-4 * K),
        close: (7.99e-4 * K, 8.21e-4 * K),
        volume: (2.29 * B, 2.77 * B),
        market_cap: (25.67 * B, 26.77 * B),
        trend: 5.8,
    },
];

// Amplitudes of the random-walk components (per-step log standard
// deviations). MARKET drives everything non-stable; IDIO terms push the
// benchmark correlation down to about 0.9.
const MARKET_SIGMA: f64 = 0.020;
const TOP_IDIO_SIGMA: f64 = 0.045;
const ALT_IDIO_SIGMA: f64 = 0.008;
const VOL_MARKET_SIGMA: f64 = 0.018;
const VOL_IDIO_SIGMA: f64 = 0.040;
const TOP_VOLUME_TREND: f64 = 6.0;

pub fn fixture_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 12, 24).unwrap()
}

pub fn fixture_end() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 24).unwrap()
}

/// The full daily calendar of the fixture, 763 days inclusive.
pub fn fixture_calendar() -> Vec<NaiveDate> {
    let mut days = Vec::with_capacity(STEP_COUNT);
    let mut day = fixture_start();
    while day <= fixture_end() {
        days.push(day);
        day = day.succ_opt().unwrap();
    }
    days
}

/// The canonical bundled dataset (seed 42).
pub fn reference_dataset() -> Vec<OhlcvRecord> {
    generate(FIXTURE_SEED).expect("canonical fixture seed must generate a valid dataset")
}

/// Generates the synthetic dataset for an arbitrary seed. The affine
/// calibration of the top-5 coins is rechecked against the record
/// invariants; a pathological draw retries with a derived seed.
pub fn generate(seed: u64) -> Result<Vec<OhlcvRecord>, MarketDataError> {
    for attempt in 0..20u64 {
        let effective = seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        if let Some(records) = build(effective) {
            return Ok(records);
        }
    }
    Err(MarketDataError::BadConfig(format!(
        "could not generate a valid synthetic dataset from seed {seed}"
    )))
}

fn fnv1a(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn coin_rng(seed: u64, ticker: &str) -> ChaCha20Rng {
    seeded_rng(seed ^ fnv1a(ticker))
}

fn random_walk(rng: &mut impl Rng, n: usize, sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut level = 0.0;
    for _ in 0..n {
        out.push(level);
        level += sigma * randn(rng);
    }
    out
}

/// Mean-reverting (Ornstein-Uhlenbeck style) noise around zero.
fn mean_reverting(rng: &mut impl Rng, n: usize, kappa: f64, sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut level = 0.0;
    for _ in 0..n {
        out.push(level);
        level = (1.0 - kappa) * level + sigma * randn(rng);
    }
    out
}

/// Rescales a positive path multiplicatively so its sample mean hits the
/// target.
fn scale_to_mean(path: Vec<f64>, mean_target: f64) -> Vec<f64> {
    let mean = crate::num::mean(&path);
    path.into_iter().map(|v| v * mean_target / mean).collect()
}

/// Rescales a path so its sample mean and sample std (n-1) hit the targets
/// exactly.
fn affine_to(path: &[f64], mean_target: f64, std_target: f64) -> Vec<f64> {
    let mut stats = RunningStats::new();
    for &v in path {
        stats.push(v);
    }
    let scale = std_target / stats.sample_std();
    let shift = mean_target - scale * stats.mean();
    path.iter().map(|v| shift + scale * v).collect()
}

struct CoinColumns {
    open: Vec<f64>,
    high: Vec<f64>,
    low: Vec<f64>,
    close: Vec<f64>,
    volume: Vec<f64>,
    market_cap: Vec<f64>,
}

fn build(seed: u64) -> Option<Vec<OhlcvRecord>> {
    let calendar = fixture_calendar();
    let n = calendar.len();
    debug_assert_eq!(n, STEP_COUNT);
    let t_hat: Vec<f64> = (0..n).map(|t| t as f64 / (n - 1) as f64).collect();

    let market = random_walk(
        &mut seeded_rng(seed ^ fnv1a("market-factor")),
        n,
        MARKET_SIGMA,
    );
    let vol_market = {
        let own = random_walk(
            &mut seeded_rng(seed ^ fnv1a("volume-factor")),
            n,
            VOL_MARKET_SIGMA,
        );
        (0..n)
            .map(|t| 0.5 * market[t] + own[t])
            .collect::<Vec<f64>>()
    };

    let mut columns: Vec<(&'static str, CoinColumns)> = Vec::with_capacity(COIN_COUNT);

    for row in &CALIBRATION {
        let mut rng = coin_rng(seed, row.coin);
        let idio = random_walk(&mut rng, n, TOP_IDIO_SIGMA);
        let latent: Vec<f64> = (0..n)
            .map(|t| (row.trend * t_hat[t] + market[t] + idio[t]).exp())
            .collect();

        let vol_idio = random_walk(&mut rng, n, VOL_IDIO_SIGMA);
        let vol_latent: Vec<f64> = (0..n)
            .map(|t| (TOP_VOLUME_TREND * t_hat[t] + vol_market[t] + vol_idio[t]).exp())
            .collect();

        let supply_drift = random_walk(&mut rng, n, 0.004);
        let cap_latent: Vec<f64> = (0..n)
            .map(|t| latent[t] * (0.1 * t_hat[t] + supply_drift[t]).exp())
            .collect();

        columns.push((
            row.coin,
            CoinColumns {
                open: affine_to(&latent, row.open.0, row.open.1),
                high: affine_to(&latent, row.high.0, row.high.1),
                low: affine_to(&latent, row.low.0, row.low.1),
                close: affine_to(&latent, row.close.0, row.close.1),
                volume: affine_to(&vol_latent, row.volume.0, row.volume.1),
                market_cap: affine_to(&cap_latent, row.market_cap.0, row.market_cap.1),
            },
        ));
    }

    for ticker in STABLECOINS {
        let mut rng = coin_rng(seed, ticker);
        let wobble = mean_reverting(&mut rng, n, 0.25, 0.6);
        let price: Vec<f64> = wobble.iter().map(|w| 1.0 + 0.004 * w).collect();
        let mut open = Vec::with_capacity(n);
        let mut high = Vec::with_capacity(n);
        let mut low = Vec::with_capacity(n);
        let mut close = Vec::with_capacity(n);
        for &p in &price {
            let o = p * (1.0 + 0.001 * randn(&mut rng));
            let c = p * (1.0 + 0.001 * randn(&mut rng));
            let hi = o.max(c) * (1.0 + 0.0005 + 0.001 * randn(&mut rng).abs());
            let lo = o.min(c) * (1.0 - 0.0005 - 0.001 * randn(&mut rng).abs());
            open.push(o);
            high.push(hi);
            low.push(lo);
            close.push(c);
        }
        let volume_level = 1e8 * (1.0 + 40.0 * rng.random::<f64>());
        let cap_level = 1e9 * (1.0 + 14.0 * rng.random::<f64>());
        let vol_noise = mean_reverting(&mut rng, n, 0.25, 0.6);
        let cap_noise = mean_reverting(&mut rng, n, 0.25, 0.6);
        columns.push((
            ticker,
            CoinColumns {
                open,
                high,
                low,
                close,
                volume: vol_noise
                    .iter()
                    .map(|w| volume_level * (0.25 * w).exp())
                    .collect(),
                market_cap: cap_noise
                    .iter()
                    .map(|w| cap_level * (0.12 * w).exp())
                    .collect(),
            },
        ));
    }

    for ticker in GENERIC_ALTS {
        let mut rng = coin_rng(seed, ticker);
        let trend = 3.5 + 2.5 * rng.random::<f64>();
        let level = 10f64.powf(-3.0 + 5.0 * rng.random::<f64>());
        let idio = random_walk(&mut rng, n, ALT_IDIO_SIGMA);
        let price: Vec<f64> = (0..n)
            .map(|t| level * (trend * t_hat[t] + market[t] + idio[t]).exp())
            .collect();

        let mut open = Vec::with_capacity(n);
        let mut high = Vec::with_capacity(n);
        let mut low = Vec::with_capacity(n);
        let mut close = Vec::with_capacity(n);
        for &p in &price {
            let o = p * (1.0 + 0.004 * randn(&mut rng));
            let c = p * (1.0 + 0.004 * randn(&mut rng));
            let hi = o.max(c) * (1.0 + 0.002 + 0.004 * randn(&mut rng).abs());
            let lo = o.min(c) * (1.0 - 0.002 - 0.004 * randn(&mut rng).abs());
            open.push(o);
            high.push(hi);
            low.push(lo);
            close.push(c);
        }

        let volume_level = 10f64.powf(6.0 + 3.0 * rng.random::<f64>());
        let vol_idio = random_walk(&mut rng, n, VOL_IDIO_SIGMA);
        let volume = scale_to_mean(
            (0..n)
                .map(|t| (1.5 * t_hat[t] + vol_market[t] + vol_idio[t]).exp())
                .collect(),
            volume_level,
        );

        // Mean market caps stay below the fifth calibrated coin so the
        // market-cap ordering puts the calibrated coins first.
        let cap_level = 10f64.powf(7.7 + 2.6 * rng.random::<f64>());
        let supply_drift = random_walk(&mut rng, n, 0.004);
        let market_cap = scale_to_mean(
            (0..n)
                .map(|t| (price[t] / level) * (0.1 * t_hat[t] + supply_drift[t]).exp())
                .collect(),
            cap_level,
        );

        columns.push((
            ticker,
            CoinColumns {
                open,
                high,
                low,
                close,
                volume,
                market_cap,
            },
        ));
    }

    let mut records = Vec::with_capacity(COIN_COUNT * n);
    for (ticker, cols) in &columns {
        for (t, &date) in calendar.iter().enumerate() {
            let record = OhlcvRecord {
                date,
                coin: ticker.to_string(),
                open: cols.open[t],
                high: cols.high[t],
                low: cols.low[t],
                close: cols.close[t],
                volume: cols.volume[t],
                market_cap: cols.market_cap[t],
            };
            if record.validate().is_err() {
                return None;
            }
            records.push(record);
        }
    }
    Some(records)
}
