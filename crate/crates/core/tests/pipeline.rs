//! End-to-end library flow: CSV bytes in, aligned panel, correlation matrix,
//! JSON export and SVG out, plus golden-file stability of the renderer.

use cryptocorr::correlate::{
    avg_cross_correlation, correlation_matrix, matrix_to_json, pearson, sliding_mean, EntryOrder,
    TimeframeSpec,
};
use cryptocorr::market_data::{parse_csv, serialize_csv, CSV_HEADER};
use cryptocorr::render::{render_correlogram, render_trend_chart, CorrelogramStyle};
use cryptocorr::series::{align_panel, CoinSeries, GapPolicy};

fn demo_csv() -> String {
    let mut text = format!("{CSV_HEADER}\n");
    // Three coins over ten days: ALPHA tracks BTC linearly, BETA is the
    // exact negation around a level.
    for t in 0..10 {
        let base = 100.0 + 3.0 * t as f64 + ((t * t) % 7) as f64;
        let alpha = 2.0 * base + 5.0;
        let beta = 500.0 - 1.5 * base;
        for (coin, p) in [("BTC", base), ("ALPHA", alpha), ("BETA", beta)] {
            text.push_str(&format!(
                "2021-03-{:02},{},{},{},{},{},{},{}\n",
                t + 1,
                coin,
                p,
                p * 1.02,
                p * 0.98,
                p * 1.01,
                p * 1e4,
                p * 1e6,
            ));
        }
    }
    text
}

#[test]
fn csv_to_matrix_to_exports() {
    let records = parse_csv(demo_csv().as_bytes()).unwrap();
    assert_eq!(records.len(), 30);

    let series = CoinSeries::from_records(&records).unwrap();
    let panel = align_panel(&series, GapPolicy::Intersect, &["BTC".to_string()]).unwrap();
    assert_eq!(panel.n_days(), 10);

    let matrix =
        correlation_matrix(&panel, "BTC", TimeframeSpec::daily(), EntryOrder::Input).unwrap();
    assert_eq!(matrix.entries.len(), 2);
    let by_coin = |name: &str| {
        matrix
            .entries
            .iter()
            .find(|e| e.coin() == name)
            .and_then(|e| e.r())
            .unwrap()
    };
    assert!((by_coin("ALPHA") - 1.0).abs() < 1e-12);
    assert!((by_coin("BETA") + 1.0).abs() < 1e-12);

    let json = matrix_to_json(&matrix);
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["entries"].as_array().unwrap().len(), 2);

    let svg = render_correlogram(&matrix, &CorrelogramStyle::default()).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains("</svg>"));

    let chart =
        render_trend_chart(&panel, &["BTC".to_string(), "ALPHA".to_string()], true).unwrap();
    assert_eq!(chart.matches("<polyline").count(), 2);
}

#[test]
fn file_round_trip_preserves_records() {
    let records = parse_csv(demo_csv().as_bytes()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("round_trip.csv");
    let mut buffer = Vec::new();
    serialize_csv(&records, &mut buffer).unwrap();
    std::fs::write(&path, &buffer).unwrap();
    let reparsed = parse_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(records, reparsed);
}

#[test]
fn exports_are_byte_identical_across_runs() {
    let run = || {
        let records = parse_csv(demo_csv().as_bytes()).unwrap();
        let series = CoinSeries::from_records(&records).unwrap();
        let panel = align_panel(&series, GapPolicy::Intersect, &["BTC".to_string()]).unwrap();
        let matrix =
            correlation_matrix(&panel, "BTC", TimeframeSpec::weekly(), EntryOrder::Input).unwrap();
        let json = matrix_to_json(&matrix);
        let svg = render_correlogram(&matrix, &CorrelogramStyle::default()).unwrap();
        (json, svg)
    };
    assert_eq!(run(), run());
}

/// The matrix agrees with a from-scratch pairwise recomputation.
#[test]
fn matrix_matches_brute_force_recomputation() {
    let records = parse_csv(demo_csv().as_bytes()).unwrap();
    let series = CoinSeries::from_records(&records).unwrap();
    let panel = align_panel(&series, GapPolicy::Intersect, &["BTC".to_string()]).unwrap();
    let spec = TimeframeSpec::weekly();
    let matrix = correlation_matrix(&panel, "BTC", spec, EntryOrder::Input).unwrap();

    for entry in &matrix.entries {
        let recomputed = avg_cross_correlation(&panel, entry.coin(), "BTC", spec).unwrap();
        assert!((entry.r().unwrap() - recomputed.r).abs() < 1e-15);
    }

    // spot-check one pair against raw pearson-on-sliding-means
    let coin_idx = panel.coin_index("ALPHA").unwrap();
    let bench_idx = panel.coin_index("BTC").unwrap();
    let close = cryptocorr::series::Variable::Close;
    let a = sliding_mean(panel.series(coin_idx, close), spec.window, spec.stride).unwrap();
    let b = sliding_mean(panel.series(bench_idx, close), spec.window, spec.stride).unwrap();
    let direct = pearson(&a, &b).unwrap();
    let entry = avg_cross_correlation(&panel, "ALPHA", "BTC", spec).unwrap();
    assert!((entry.per_variable[close.index()].unwrap() - direct).abs() < 1e-15);
}

/// The bundled dataset charts its five largest coins across the full dataset
/// window, normalized onto [0, 1].
#[test]
fn fixture_top5_trend_chart_spans_the_dataset_window() {
    let records = cryptocorr::fixture::reference_dataset();
    let series = CoinSeries::from_records(&records).unwrap();
    let panel = align_panel(
        &series,
        GapPolicy::Intersect,
        &["BTC".to_string(), "ETH".to_string()],
    )
    .unwrap();
    let top5: Vec<String> = panel.coins().iter().take(5).cloned().collect();
    assert_eq!(top5, ["BTC", "ETH", "BNB", "XRP", "ADA"]);
    let svg = render_trend_chart(&panel, &top5, true).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
    assert!(svg.contains(">2019-12-24</text>"));
    assert!(svg.contains(">2022-01-24</text>"));
}

/// Golden-file check: the renderer's output for a fixed small matrix is
/// pinned byte-for-byte.
#[test]
fn correlogram_matches_golden_file() {
    let records = parse_csv(demo_csv().as_bytes()).unwrap();
    let series = CoinSeries::from_records(&records).unwrap();
    let panel = align_panel(&series, GapPolicy::Intersect, &["BTC".to_string()]).unwrap();
    let matrix =
        correlation_matrix(&panel, "BTC", TimeframeSpec::daily(), EntryOrder::Input).unwrap();
    let svg = render_correlogram(&matrix, &CorrelogramStyle::default()).unwrap();
    let golden = include_str!("golden/correlogram_demo.svg");
    assert_eq!(svg, golden, "renderer output drifted from the golden file");
}
