//! Pearson coefficients, sliding-window aggregation and the averaged
//! alt-coin-vs-benchmark cross-correlation matrices.

use thiserror::Error;

use crate::series::{AlignedPanel, Variable};

#[derive(Debug, Error)]
pub enum CorrelateError {
    #[error("length mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },
    #[error("need at least two points, got {0}")]
    TooShort(usize),
    #[error("constant input: correlation undefined")]
    ConstantInput,
    #[error("window {window} exceeds sequence length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("invalid timeframe: {0}")]
    BadTimeframe(String),
    #[error("unknown coin {0}")]
    UnknownCoin(String),
    #[error("{0} is not a configured benchmark of this panel")]
    NotABenchmark(String),
    #[error("cannot correlate {0} with itself")]
    SelfCorrelation(String),
    #[error("correlation of {coin} vs {benchmark} undefined: every variable pair is constant after aggregation")]
    Undefined { coin: String, benchmark: String },
    #[error("no alt-coins to correlate against {0}")]
    NoAltCoins(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Timeframe {
    Daily,
    Weekly,
    Monthly,
}

impl Timeframe {
    pub const ALL: [Timeframe; 3] = [Timeframe::Daily, Timeframe::Weekly, Timeframe::Monthly];

    pub fn name(self) -> &'static str {
        match self {
            Timeframe::Daily => "daily",
            Timeframe::Weekly => "weekly",
            Timeframe::Monthly => "monthly",
        }
    }

    /// Window length in days: daily observations are used as-is, weekly and
    /// monthly aggregate over 7 and 30 days.
    pub fn window(self) -> usize {
        match self {
            Timeframe::Daily => 1,
            Timeframe::Weekly => 7,
            Timeframe::Monthly => 30,
        }
    }
}

/// A named window/stride pair. Windows slide (stride < window) rather than
/// tumble, except for the trivial daily window of 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeframeSpec {
    pub timeframe: Timeframe,
    pub window: usize,
    pub stride: usize,
}

impl TimeframeSpec {
    pub fn new(timeframe: Timeframe) -> Self {
        Self {
            timeframe,
            window: timeframe.window(),
            stride: 1,
        }
    }

    pub fn daily() -> Self {
        Self::new(Timeframe::Daily)
    }

    pub fn weekly() -> Self {
        Self::new(Timeframe::Weekly)
    }

    pub fn monthly() -> Self {
        Self::new(Timeframe::Monthly)
    }

    pub fn with_stride(timeframe: Timeframe, stride: usize) -> Result<Self, CorrelateError> {
        let window = timeframe.window();
        if stride == 0 {
            return Err(CorrelateError::BadTimeframe("stride must be >= 1".into()));
        }
        if window > 1 && stride >= window {
            return Err(CorrelateError::BadTimeframe(format!(
                "stride {stride} must stay below window {window} to keep windows overlapping"
            )));
        }
        Ok(Self {
            timeframe,
            window,
            stride,
        })
    }
}

/// Averaged Pearson coefficient of one alt-coin against one benchmark.
/// `per_variable` holds the six per-variable coefficients; a `None` marks a
/// pair excluded because it was constant after aggregation. `r` is the
/// arithmetic mean of the present values.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEntry {
    pub coin: String,
    pub benchmark: String,
    pub r: f64,
    pub per_variable: [Option<f64>; 6],
}

/// One row of the cross-correlation matrix; `Undefined` marks a coin whose
/// six variable pairs were all degenerate.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixEntry {
    Entry(CorrelationEntry),
    Undefined { coin: String },
}

impl MatrixEntry {
    pub fn coin(&self) -> &str {
        match self {
            MatrixEntry::Entry(e) => &e.coin,
            MatrixEntry::Undefined { coin } => coin,
        }
    }

    pub fn r(&self) -> Option<f64> {
        match self {
            MatrixEntry::Entry(e) => Some(e.r),
            MatrixEntry::Undefined { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntryOrder {
    /// Panel coin order (descending mean market cap).
    #[default]
    Input,
    /// Descending |r|; undefined entries sort last.
    DescendingAbsR,
}

/// Cross-correlations of every alt-coin against one benchmark for one
/// timeframe.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub benchmark: String,
    pub spec: TimeframeSpec,
    pub entries: Vec<MatrixEntry>,
}

/// Sample Pearson coefficient, clamped to [-1, 1] against rounding.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CorrelateError> {
    if x.len() != y.len() {
        return Err(CorrelateError::ShapeMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(CorrelateError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(CorrelateError::ConstantInput);
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Means over sliding windows: `out[k] = mean(values[k*stride .. k*stride + window])`
/// for every fully contained window.
pub fn sliding_mean(
    values: &[f64],
    window: usize,
    stride: usize,
) -> Result<Vec<f64>, CorrelateError> {
    if window == 0 || stride == 0 {
        return Err(CorrelateError::BadTimeframe(
            "window and stride must be >= 1".into(),
        ));
    }
    if window > values.len() {
        return Err(CorrelateError::WindowTooLarge {
            window,
            len: values.len(),
        });
    }
    let count = (values.len() - window) / stride + 1;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let start = k * stride;
        let sum: f64 = values[start..start + window].iter().sum();
        out.push(sum / window as f64);
    }
    Ok(out)
}

/// Correlates one coin against a benchmark: each of the six variables is
/// window-aggregated on both sides, correlated, and the coefficients averaged.
/// Pairs constant after aggregation are excluded and left as `None`.
pub fn avg_cross_correlation(
    panel: &AlignedPanel,
    coin: &str,
    benchmark: &str,
    spec: TimeframeSpec,
) -> Result<CorrelationEntry, CorrelateError> {
    if coin == benchmark {
        return Err(CorrelateError::SelfCorrelation(coin.to_string()));
    }
    let coin_idx = panel
        .coin_index(coin)
        .ok_or_else(|| CorrelateError::UnknownCoin(coin.to_string()))?;
    let bench_idx = panel
        .coin_index(benchmark)
        .ok_or_else(|| CorrelateError::UnknownCoin(benchmark.to_string()))?;

    let mut per_variable = [None; 6];
    for variable in Variable::ALL {
        let a = sliding_mean(panel.series(coin_idx, variable), spec.window, spec.stride)?;
        let b = sliding_mean(panel.series(bench_idx, variable), spec.window, spec.stride)?;
        match pearson(&a, &b) {
            Ok(r) => per_variable[variable.index()] = Some(r),
            Err(CorrelateError::ConstantInput) => {} // excluded, stays None
            Err(other) => return Err(other),
        }
    }

    let present: Vec<f64> = per_variable.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(CorrelateError::Undefined {
            coin: coin.to_string(),
            benchmark: benchmark.to_string(),
        });
    }
    Ok(CorrelationEntry {
        coin: coin.to_string(),
        benchmark: benchmark.to_string(),
        r: present.iter().sum::<f64>() / present.len() as f64,
        per_variable,
    })
}

/// One entry per non-benchmark coin, in deterministic order. Fully degenerate
/// coins become `Undefined` entries rather than failures.
pub fn correlation_matrix(
    panel: &AlignedPanel,
    benchmark: &str,
    spec: TimeframeSpec,
    order: EntryOrder,
) -> Result<CorrelationMatrix, CorrelateError> {
    if !panel.is_benchmark(benchmark) {
        return Err(CorrelateError::NotABenchmark(benchmark.to_string()));
    }
    let alt_coins: Vec<&String> = panel
        .coins()
        .iter()
        .filter(|c| !panel.is_benchmark(c))
        .collect();
    if alt_coins.is_empty() {
        return Err(CorrelateError::NoAltCoins(benchmark.to_string()));
    }

    let mut entries = Vec::with_capacity(alt_coins.len());
    for coin in alt_coins {
        match avg_cross_correlation(panel, coin, benchmark, spec) {
            Ok(entry) => entries.push(MatrixEntry::Entry(entry)),
            Err(CorrelateError::Undefined { coin, .. }) => {
                entries.push(MatrixEntry::Undefined { coin })
            }
            Err(other) => return Err(other),
        }
    }

    if order == EntryOrder::DescendingAbsR {
        entries.sort_by(|a, b| {
            let abs = |e: &MatrixEntry| e.r().map(f64::abs);
            match (abs(a), abs(b)) {
                (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Equal),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            }
            .then_with(|| a.coin().cmp(b.coin()))
        });
    }

    Ok(CorrelationMatrix {
        benchmark: benchmark.to_string(),
        spec,
        entries,
    })
}

/// JSON export with fixed 6-decimal coefficients; byte-deterministic for
/// identical matrices. Excluded variable pairs and undefined entries are
/// emitted as `null`.
pub fn matrix_to_json(matrix: &CorrelationMatrix) -> String {
    fn fmt(r: Option<f64>) -> String {
        match r {
            Some(v) => format!("{v:.6}"),
            None => "null".into(),
        }
    }

    let mut out = String::new();
    out.push_str(&format!(
        "{{\"benchmark\": \"{}\", \"timeframe\": \"{}\", \"window\": {}, \"entries\": [",
        matrix.benchmark,
        matrix.spec.timeframe.name(),
        matrix.spec.window
    ));
    for (i, entry) in matrix.entries.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let (r, per_variable) = match entry {
            MatrixEntry::Entry(e) => (Some(e.r), e.per_variable),
            MatrixEntry::Undefined { .. } => (None, [None; 6]),
        };
        out.push_str(&format!(
            "{{\"coin\": \"{}\", \"r\": {}, \"per_variable\": {{",
            entry.coin(),
            fmt(r)
        ));
        for (j, variable) in Variable::ALL.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!(
                "\"{}\": {}",
                variable.name(),
                fmt(per_variable[variable.index()])
            ));
        }
        out.push_str("}}");
    }
    out.push_str("]}\n");
    out
}
