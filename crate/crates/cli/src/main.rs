//! `cryptocorr`: reproducible cryptocoin correlation and forecasting runs.
//!
//! Subcommands: `stats`, `correlate`, `correlogram`, `chart`, `forecast`,
//! `fetch` and `fixture`. Exit codes: 0 success, 1 domain/validation error,
//! 2 I/O or transport error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cryptocorr::correlate::{
    correlation_matrix, matrix_to_json, EntryOrder, Timeframe, TimeframeSpec,
};
use cryptocorr::error::Error;
use cryptocorr::fixture;
use cryptocorr::forecast::{fit, ArimaSpec};
use cryptocorr::market_data::{
    fetch_remote, parse_csv_opts, serialize_csv, validate_dataset, OhlcvRecord, ParseOptions,
    RemoteSourceConfig,
};
use cryptocorr::render::{render_correlogram, render_trend_chart, CorrelogramStyle};
use cryptocorr::series::{
    align_panel, summary_stats, AlignedPanel, CoinSeries, GapPolicy, Variable, DEFAULT_BENCHMARKS,
};

#[derive(Parser)]
#[command(
    name = "cryptocorr",
    version,
    about = "Cryptocoin correlation and forecasting engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// CSV input path(s) with header date,coin,open,high,low,close,volume,market_cap
    #[arg(long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Downgrade OHLC envelope violations to warnings
    #[arg(long)]
    lenient: bool,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TimeframeArg {
    Daily,
    Weekly,
    Monthly,
    All,
}

impl TimeframeArg {
    fn specs(self) -> Vec<TimeframeSpec> {
        match self {
            TimeframeArg::Daily => vec![TimeframeSpec::daily()],
            TimeframeArg::Weekly => vec![TimeframeSpec::weekly()],
            TimeframeArg::Monthly => vec![TimeframeSpec::monthly()],
            TimeframeArg::All => Timeframe::ALL
                .iter()
                .map(|tf| TimeframeSpec::new(*tf))
                .collect(),
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    /// Panel order (descending mean market cap)
    Input,
    /// Descending |r|
    AbsR,
}

impl From<OrderArg> for EntryOrder {
    fn from(value: OrderArg) -> Self {
        match value {
            OrderArg::Input => EntryOrder::Input,
            OrderArg::AbsR => EntryOrder::DescendingAbsR,
        }
    }
}

#[derive(Args, Clone)]
struct CorrelationArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Benchmark ticker(s)
    #[arg(long = "benchmark", num_args = 1.., default_values_t = DEFAULT_BENCHMARKS.iter().map(|s| s.to_string()).collect::<Vec<_>>())]
    benchmarks: Vec<String>,
    #[arg(long, value_enum, default_value_t = TimeframeArg::All)]
    timeframe: TimeframeArg,
    /// Correlate day-over-day log returns instead of levels
    #[arg(long)]
    returns: bool,
    /// Entry ordering in exports
    #[arg(long, value_enum, default_value_t = OrderArg::Input)]
    order: OrderArg,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset integrity report and per-coin summary statistics
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cross-correlation matrices as JSON, one file per benchmark and timeframe
    Correlate {
        #[command(flatten)]
        args: CorrelationArgs,
    },
    /// Cross-correlograms as SVG, one file per benchmark and timeframe
    Correlogram {
        #[command(flatten)]
        args: CorrelationArgs,
    },
    /// Multi-coin trend chart of daily average prices
    Chart {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Coins to chart (default: top 5 by mean market cap)
        #[arg(long = "coin", num_args = 1..)]
        coins: Vec<String>,
        /// Plot raw prices instead of min-max normalized ones
        #[arg(long)]
        raw: bool,
    },
    /// Fit a model to one coin's closing prices and forecast
    Forecast {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Coin ticker to model
        #[arg(long)]
        coin: String,
        /// Model orders p,d,q or p,d,q,P,D,Q,s
        #[arg(long, default_value = "1,1,1")]
        spec: String,
        /// Forecast horizon in days
        #[arg(long)]
        horizon: usize,
        /// Seed for reproducible demo runs (fitting itself is deterministic)
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Fetch one coin's history from a REST endpoint and store it as CSV
    Fetch {
        #[command(flatten)]
        out: OutArgs,
        /// Base URL of the history endpoint
        #[arg(long)]
        remote: String,
        #[arg(long)]
        coin: String,
        /// Range start, YYYY-MM-DD
        #[arg(long)]
        start: NaiveDate,
        /// Range end, YYYY-MM-DD
        #[arg(long)]
        end: NaiveDate,
        /// Request timeout in seconds
        #[arg(long, default_value_t = 10)]
        timeout: u64,
        /// Retry budget for transient failures
        #[arg(long, default_value_t = 3)]
        retries: u32,
        /// API key (CRYPTOCORR_API_KEY overrides)
        #[arg(long)]
        api_key: Option<String>,
    },
    /// Write the bundled synthetic dataset (68 coins x 763 days)
    Fixture {
        /// Output CSV path
        #[arg(long, default_value = "out/fixture.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = fixture::FIXTURE_SEED)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Stats { input, out } => cmd_stats(&input, &out),
        Command::Correlate { args } => cmd_correlate(&args, false),
        Command::Correlogram { args } => cmd_correlate(&args, true),
        Command::Chart {
            input,
            out,
            coins,
            raw,
        } => cmd_chart(&input, &out, &coins, raw),
        Command::Forecast {
            input,
            out,
            coin,
            spec,
            horizon,
            seed: _,
        } => cmd_forecast(&input, &out, &coin, &spec, horizon),
        Command::Fetch {
            out,
            remote,
            coin,
            start,
            end,
            timeout,
            retries,
            api_key,
        } => cmd_fetch(&out, &remote, &coin, start, end, timeout, retries, api_key),
        Command::Fixture { out, seed } => cmd_fixture(&out, seed),
    }
}

fn load_records(input: &InputArgs) -> Result<Vec<OhlcvRecord>, Error> {
    let mut records = Vec::new();
    for path in &input.inputs {
        let file = fs::File::open(path)
            .map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
        let parsed = parse_csv_opts(
            file,
            ParseOptions {
                lenient: input.lenient,
            },
        )
        .map_err(cryptocorr::Error::from)?;
        for warning in &parsed.warnings {
            eprintln!("warning: {warning}");
        }
        records.extend(parsed.records);
    }
    Ok(records)
}

fn build_panel(input: &InputArgs, benchmarks: &[String]) -> Result<AlignedPanel, Error> {
    let records = load_records(input)?;
    let series = CoinSeries::from_records(&records)?;
    Ok(align_panel(&series, GapPolicy::Intersect, benchmarks)?)
}

fn ensure_out_dir(out: &Path) -> Result<(), Error> {
    fs::create_dir_all(out).map_err(|e| {
        Error::io(
            format!("cannot create output directory {}", out.display()),
            e,
        )
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

/// Formats a statistic for the summary table:
/// plain two decimals for readable magnitudes, scientific otherwise.
fn fmt_stat(value: f64) -> String {
    if value == 0.0 {
        "0.00".to_string()
    } else if (0.01..1e6).contains(&value.abs()) {
        format!("{value:.2}")
    } else {
        format!("{value:.2e}")
    }
}

fn cmd_stats(input: &InputArgs, out: &OutArgs) -> Result<(), Error> {
    let records = load_records(input)?;
    let report = validate_dataset(&records);

    println!("coins:              {}", report.coin_count);
    println!("steps per coin:     {}", report.step_count);
    println!("total observations: {}", report.total_observations);
    match report.date_range {
        Some((start, end)) => println!("date range:         {start} .. {end}"),
        None => println!("date range:         (empty)"),
    }
    if report.coins_with_gaps.is_empty() {
        println!("gaps:               none");
    } else {
        println!(
            "gaps:               {} coin(s)",
            report.coins_with_gaps.len()
        );
        for (coin, missing) in &report.coins_with_gaps {
            println!("  {coin}: {missing} missing day(s)");
        }
    }

    let series = CoinSeries::from_records(&records)?;
    if series.is_empty() {
        return Ok(());
    }

    // Sort rows by descending mean market cap, like the aligned panel.
    let mut rows: Vec<(&CoinSeries, cryptocorr::series::SummaryStats)> =
        series.iter().map(|s| (s, summary_stats(s))).collect();
    rows.sort_by(|(a, sa), (b, sb)| {
        let ca = sa.get(Variable::MarketCap).mean;
        let cb = sb.get(Variable::MarketCap).mean;
        cb.partial_cmp(&ca)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.coin().cmp(b.coin()))
    });

    println!();
    println!(
        "{:<6} {:>15} {:>15} {:>15} {:>15} {:>15} {:>17}",
        "coin", "open", "high", "low", "close", "volume", "market_cap"
    );
    println!("(prices in 1K USD, volume and market cap in 1B USD; mean/std)");
    let mut csv = String::from("coin,variable,mean,std\n");
    for (series, stats) in &rows {
        let cell = |v: Variable, scale: f64| {
            let s = stats.get(v);
            format!("{}/{}", fmt_stat(s.mean / scale), fmt_stat(s.std / scale))
        };
        println!(
            "{:<6} {:>15} {:>15} {:>15} {:>15} {:>15} {:>17}",
            series.coin(),
            cell(Variable::Open, 1e3),
            cell(Variable::High, 1e3),
            cell(Variable::Low, 1e3),
            cell(Variable::Close, 1e3),
            cell(Variable::Volume, 1e9),
            cell(Variable::MarketCap, 1e9),
        );
        for variable in Variable::ALL {
            let s = stats.get(variable);
            csv.push_str(&format!(
                "{},{},{},{}\n",
                series.coin(),
                variable.name(),
                s.mean,
                s.std
            ));
        }
    }

    ensure_out_dir(&out.out)?;
    write_file(&out.out.join("stats.csv"), &csv)?;
    Ok(())
}

fn cmd_correlate(args: &CorrelationArgs, render: bool) -> Result<(), Error> {
    let panel = build_panel(&args.input, &args.benchmarks)?;
    let panel = if args.returns {
        panel.log_returns()?
    } else {
        panel
    };
    ensure_out_dir(&args.out.out)?;

    for benchmark in &args.benchmarks {
        for spec in args.timeframe.specs() {
            let matrix = correlation_matrix(&panel, benchmark, spec, args.order.into())?;
            if render {
                let svg = render_correlogram(&matrix, &CorrelogramStyle::default())?;
                let name = format!("correlogram_{}_{}.svg", benchmark, spec.timeframe.name());
                write_file(&args.out.out.join(name), &svg)?;
            } else {
                let json = matrix_to_json(&matrix);
                let name = format!("corr_{}_{}.json", benchmark, spec.timeframe.name());
                write_file(&args.out.out.join(name), &json)?;
            }
        }
    }
    Ok(())
}

fn cmd_chart(input: &InputArgs, out: &OutArgs, coins: &[String], raw: bool) -> Result<(), Error> {
    let benchmarks: Vec<String> = Vec::new();
    let panel = build_panel(input, &benchmarks)?;
    let coins: Vec<String> = if coins.is_empty() {
        panel.coins().iter().take(5).cloned().collect()
    } else {
        coins.to_vec()
    };
    let svg = render_trend_chart(&panel, &coins, !raw)?;
    ensure_out_dir(&out.out)?;
    let name = if raw {
        "trend_raw.svg"
    } else {
        "trend_norm.svg"
    };
    write_file(&out.out.join(name), &svg)?;
    Ok(())
}

fn cmd_forecast(
    input: &InputArgs,
    out: &OutArgs,
    coin: &str,
    spec_text: &str,
    horizon: usize,
) -> Result<(), Error> {
    if horizon == 0 {
        return Err(Error::Usage("horizon must be at least 1".into()));
    }
    let spec: ArimaSpec = spec_text.parse().map_err(cryptocorr::Error::from)?;
    let records = load_records(input)?;
    let series = CoinSeries::from_records(&records)?;
    let series = series
        .iter()
        .find(|s| s.coin() == coin)
        .ok_or_else(|| cryptocorr::series::SeriesError::UnknownCoin(coin.to_string()))
        .map_err(cryptocorr::Error::from)?;

    let model = fit(&spec, series.values(Variable::Close))?;
    let forecast = model.forecast(horizon);

    let forecast_json: Vec<String> = forecast.iter().map(|v| format!("{v}")).collect();
    let payload = format!(
        "{{\n  \"coin\": \"{}\",\n  \"horizon\": {},\n  \"forecast\": [{}],\n  \"model\": {}\n}}\n",
        coin,
        horizon,
        forecast_json.join(", "),
        model.to_json()
    );
    ensure_out_dir(&out.out)?;
    write_file(&out.out.join(format!("forecast_{coin}.json")), &payload)?;
    println!(
        "{coin}: fitted in {} iteration(s), sigma2 = {:.6e}",
        model.iterations, model.sigma2
    );
    for (h, value) in forecast.iter().enumerate() {
        println!("  t+{:<3} {value}", h + 1);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_fetch(
    out: &OutArgs,
    remote: &str,
    coin: &str,
    start: NaiveDate,
    end: NaiveDate,
    timeout: u64,
    retries: u32,
    api_key: Option<String>,
) -> Result<(), Error> {
    let config = RemoteSourceConfig::new(
        remote,
        api_key,
        Duration::from_secs(timeout.max(1)),
        retries,
    )
    .map_err(cryptocorr::Error::from)?;
    let records = fetch_remote(&config, coin, start, end).map_err(cryptocorr::Error::from)?;
    ensure_out_dir(&out.out)?;
    let path = out.out.join(format!("fetch_{coin}.csv"));
    let mut buffer = Vec::new();
    serialize_csv(&records, &mut buffer)
        .map_err(|e| Error::io(format!("cannot serialize {}", path.display()), e))?;
    fs::write(&path, buffer)
        .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
    println!("fetched {} record(s) for {coin}", records.len());
    Ok(())
}

fn cmd_fixture(out: &Path, seed: u64) -> Result<(), Error> {
    let records = fixture::generate(seed).map_err(cryptocorr::Error::from)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_out_dir(parent)?;
        }
    }
    let mut buffer = Vec::new();
    serialize_csv(&records, &mut buffer)
        .map_err(|e| Error::io(format!("cannot serialize {}", out.display()), e))?;
    fs::write(out, buffer).map_err(|e| Error::io(format!("cannot write {}", out.display()), e))?;
    println!(
        "wrote {} records ({} coins x {} days) to {}",
        records.len(),
        fixture::COIN_COUNT,
        fixture::STEP_COUNT,
        out.display()
    );
    Ok(())
}
