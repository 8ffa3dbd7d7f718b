//! Exit-code and output-shape checks for the `cryptocorr` binary.
//! Convention: 0 success, 1 domain/validation error, 2 I/O or transport.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cryptocorr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

const HEADER: &str = "date,coin,open,high,low,close,volume,market_cap";

fn write_demo_csv_days(path: &Path, coins: &[&str], days: usize) {
    let start = chrono::NaiveDate::from_ymd_opt(2021, 6, 1).unwrap();
    let mut text = format!("{HEADER}\n");
    for t in 0..days {
        let date = start + chrono::Duration::days(t as i64);
        for (i, coin) in coins.iter().enumerate() {
            let base = 50.0 * (i + 1) as f64 + 2.0 * t as f64 + ((t * (i + 3)) % 5) as f64;
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                date.format("%Y-%m-%d"),
                coin,
                base,
                base * 1.03,
                base * 0.97,
                base * 1.01,
                base * 1e4,
                base * 1e6 * (coins.len() - i) as f64,
            ));
        }
    }
    fs::write(path, text).unwrap();
}

fn write_demo_csv(path: &Path, coins: &[&str]) {
    write_demo_csv_days(path, coins, 12);
}

#[test]
fn stats_succeeds_on_valid_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_demo_csv(&csv, &["BTC", "ETH", "LTC"]);
    let out = dir.path().join("out");
    let output = run(&[
        "stats",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("coins:              3"));
    assert!(stdout.contains("steps per coin:     12"));
    assert!(out.join("stats.csv").exists());
}

#[test]
fn stats_on_empty_csv_reports_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, format!("{HEADER}\n")).unwrap();
    let output = run(&[
        "stats",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("total observations: 0"));
}

#[test]
fn missing_input_file_exits_2_with_path() {
    let output = run(&[
        "stats",
        "--input",
        "/nonexistent/data.csv",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("/nonexistent/data.csv"));
}

#[test]
fn invalid_ohlc_exits_1_and_lenient_downgrades() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, format!("{HEADER}\n2021-01-01,BTC,10,9,11,10,1,1\n")).unwrap();
    let strict = run(&[
        "stats",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("o1").to_str().unwrap(),
    ]);
    assert_eq!(code(&strict), 1);
    assert!(String::from_utf8_lossy(&strict.stderr).contains("BTC"));

    let lenient = run(&[
        "stats",
        "--input",
        csv.to_str().unwrap(),
        "--lenient",
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(code(&lenient), 0);
    assert!(String::from_utf8_lossy(&lenient.stderr).contains("warning"));
}

#[test]
fn correlate_single_selection_writes_one_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_demo_csv(&csv, &["BTC", "ETH", "LTC", "XRP"]);
    let out = dir.path().join("out");
    let output = run(&[
        "correlate",
        "--input",
        csv.to_str().unwrap(),
        "--benchmark",
        "BTC",
        "--timeframe",
        "daily",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let files: Vec<_> = fs::read_dir(&out).unwrap().collect();
    assert_eq!(files.len(), 1);
    assert!(out.join("corr_BTC_daily.json").exists());
}

#[test]
fn correlate_defaults_write_six_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_demo_csv_days(&csv, &["BTC", "ETH", "LTC", "XRP", "ADA"], 45);
    let out = dir.path().join("out");
    let output = run(&[
        "correlate",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0);
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "corr_BTC_daily.json",
            "corr_BTC_monthly.json",
            "corr_BTC_weekly.json",
            "corr_ETH_daily.json",
            "corr_ETH_monthly.json",
            "corr_ETH_weekly.json",
        ]
    );
}

#[test]
fn correlate_on_log_returns_writes_labeled_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_demo_csv_days(&csv, &["BTC", "ETH", "LTC"], 20);
    let out = dir.path().join("out");
    let output = run(&[
        "correlate",
        "--input",
        csv.to_str().unwrap(),
        "--benchmark",
        "BTC",
        "--timeframe",
        "weekly",
        "--returns",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let json = fs::read_to_string(out.join("corr_BTC_weekly.json")).unwrap();
    assert!(json.contains("\"timeframe\": \"weekly\""));
}

#[test]
fn correlate_without_alt_coins_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("only_btc.csv");
    write_demo_csv(&csv, &["BTC"]);
    let output = run(&[
        "correlate",
        "--input",
        csv.to_str().unwrap(),
        "--benchmark",
        "BTC",
        "--timeframe",
        "daily",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("no alt-coins"));
}

#[test]
fn unknown_benchmark_exits_1_naming_the_ticker() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_demo_csv(&csv, &["BTC", "ETH"]);
    let output = run(&[
        "correlogram",
        "--input",
        csv.to_str().unwrap(),
        "--benchmark",
        "NOPE",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("NOPE"));
}

#[test]
fn chart_writes_normalized_and_raw_variants() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_demo_csv(&csv, &["BTC", "ETH", "LTC"]);
    let out = dir.path().join("out");
    let norm = run(&[
        "chart",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&norm), 0);
    assert!(out.join("trend_norm.svg").exists());
    let raw = run(&[
        "chart",
        "--input",
        csv.to_str().unwrap(),
        "--raw",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&raw), 0);
    assert!(out.join("trend_raw.svg").exists());
}

#[test]
fn forecast_random_walk_is_flat_at_last_close() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    // 40 days of a single coin, enough for the (0,1,0) length heuristic.
    let mut text = format!("{HEADER}\n");
    let mut last_close = 0.0;
    for t in 0..40 {
        let base = 100.0 + ((t * 13) % 17) as f64;
        last_close = base * 1.01;
        text.push_str(&format!(
            "2021-{:02}-{:02},BTC,{},{},{},{},{},{}\n",
            3 + t / 28,
            (t % 28) + 1,
            base,
            base * 1.05,
            base * 0.95,
            last_close,
            1e6,
            1e8,
        ));
    }
    fs::write(&csv, text).unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "forecast",
        "--input",
        csv.to_str().unwrap(),
        "--coin",
        "BTC",
        "--spec",
        "0,1,0",
        "--horizon",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let payload: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("forecast_BTC.json")).unwrap()).unwrap();
    let forecast = payload["forecast"].as_array().unwrap();
    assert_eq!(forecast.len(), 4);
    for value in forecast {
        assert!((value.as_f64().unwrap() - last_close).abs() < 1e-9);
    }
}

#[test]
fn forecast_zero_horizon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_demo_csv(&csv, &["BTC"]);
    let output = run(&[
        "forecast",
        "--input",
        csv.to_str().unwrap(),
        "--coin",
        "BTC",
        "--spec",
        "0,1,0",
        "--horizon",
        "0",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("horizon"));
}

#[test]
fn duplicate_rows_across_files_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_demo_csv(&a, &["BTC", "ETH"]);
    write_demo_csv(&b, &["BTC"]);
    let output = run(&[
        "stats",
        "--input",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("duplicate"));
}

#[test]
fn fixture_subcommand_writes_the_bundled_dataset_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixture.csv");
    let output = run(&["fixture", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&output), 0);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    assert_eq!(text.lines().count(), 1 + 68 * 763);
}

#[test]
fn stats_on_the_fixture_prints_the_reference_btc_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fixture.csv");
    assert_eq!(code(&run(&["fixture", "--out", csv.to_str().unwrap()])), 0);
    let output = run(&[
        "stats",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    let btc_row = stdout
        .lines()
        .find(|l| l.starts_with("BTC"))
        .expect("BTC row present");
    for cell in [
        "29.39/19.55",
        "30.18/20.07",
        "28.50/18.92",
        "29.42/19.53",
        "39.63/20.41",
        "550.41/368.54",
    ] {
        assert!(btc_row.contains(cell), "row was: {btc_row}");
    }
}

#[test]
fn fetch_against_unreachable_host_exits_2() {
    let output = run(&[
        "fetch",
        "--remote",
        "http://127.0.0.1:9",
        "--coin",
        "BTC",
        "--start",
        "2021-01-01",
        "--end",
        "2021-01-02",
        "--retries",
        "0",
        "--timeout",
        "1",
        "--out",
        "/tmp/fetch_out",
    ]);
    assert_eq!(code(&output), 2);
}
