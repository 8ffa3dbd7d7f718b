//! Deterministic SVG output: cross-correlograms (a lattice of circles whose
//! radius encodes |r| and whose color encodes the sign) and multi-coin trend
//! charts. Coordinates are written with fixed 3-decimal precision so equal
//! inputs produce byte-identical documents.

use std::fmt::Write as _;

use thiserror::Error;

use crate::correlate::{CorrelationMatrix, MatrixEntry};
use crate::series::{min_max_normalize, AlignedPanel, SeriesError};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot render an empty matrix")]
    EmptyMatrix,
    #[error("invalid style: {0}")]
    BadStyle(String),
    #[error("unknown coin {0}")]
    UnknownCoin(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Layout order of correlogram cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LayoutOrder {
    /// Row-major, alphabetical by ticker.
    #[default]
    Alphabetical,
    /// Keep the matrix entry order.
    MatrixOrder,
}

#[derive(Debug, Clone)]
pub struct CorrelogramStyle {
    /// Radius, in pixels, of a |r| = 1 circle.
    pub max_radius: f64,
    pub positive_color: String,
    pub negative_color: String,
    /// Fixed (rows, columns); `None` picks a near-square grid.
    pub grid: Option<(usize, usize)>,
    pub label_font_size: f64,
    pub order: LayoutOrder,
}

impl Default for CorrelogramStyle {
    fn default() -> Self {
        Self {
            max_radius: 18.0,
            positive_color: "#2e8b57".into(),
            negative_color: "#cc2b2b".into(),
            grid: None,
            label_font_size: 11.0,
            order: LayoutOrder::Alphabetical,
        }
    }
}

impl CorrelogramStyle {
    fn validate(&self) -> Result<(), RenderError> {
        if !self.max_radius.is_finite() || self.max_radius <= 0.0 {
            return Err(RenderError::BadStyle("max_radius must be > 0".into()));
        }
        if !self.label_font_size.is_finite() || self.label_font_size <= 0.0 {
            return Err(RenderError::BadStyle("label_font_size must be > 0".into()));
        }
        for color in [&self.positive_color, &self.negative_color] {
            let hex_ok = color.len() == 7
                && color.starts_with('#')
                && color[1..].bytes().all(|b| b.is_ascii_hexdigit());
            if !hex_ok {
                return Err(RenderError::BadStyle(format!(
                    "color `{color}` is not a #rrggbb string"
                )));
            }
        }
        if let Some((rows, cols)) = self.grid {
            if rows == 0 || cols == 0 {
                return Err(RenderError::BadStyle("grid dimensions must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Circle radius for a coefficient: linear in |r|.
pub fn circle_radius(r: f64, max_radius: f64) -> f64 {
    r.abs() * max_radius
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders one labeled circle per matrix entry. |r| scales the radius,
/// the sign picks the fill; r = 0 keeps the label and omits the circle;
/// undefined entries become hollow dashed markers.
pub fn render_correlogram(
    matrix: &CorrelationMatrix,
    style: &CorrelogramStyle,
) -> Result<String, RenderError> {
    style.validate()?;
    if matrix.entries.is_empty() {
        return Err(RenderError::EmptyMatrix);
    }

    let mut entries: Vec<&MatrixEntry> = matrix.entries.iter().collect();
    if style.order == LayoutOrder::Alphabetical {
        entries.sort_by(|a, b| a.coin().cmp(b.coin()));
    }

    let n = entries.len();
    let (rows, cols) = style.grid.unwrap_or_else(|| {
        let cols = (n as f64).sqrt().ceil() as usize;
        (n.div_ceil(cols), cols)
    });
    if rows * cols < n {
        return Err(RenderError::BadStyle(format!(
            "grid {rows}x{cols} cannot hold {n} entries"
        )));
    }

    let cell_w = style.max_radius * 2.0 + 26.0;
    let cell_h = style.max_radius * 2.0 + 14.0 + style.label_font_size + 8.0;
    let margin = 12.0;
    let title_h = 22.0;
    let width = margin * 2.0 + cols as f64 * cell_w;
    let height = margin * 2.0 + title_h + rows as f64 * cell_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        f3(width), f3(height), f3(width), f3(height)
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        f3(width),
        f3(height)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"{}\">{} vs alt-coins, {} (window {}, stride {})</text>",
        f3(width / 2.0),
        f3(margin + 14.0),
        f3(13.0),
        escape(&matrix.benchmark),
        matrix.spec.timeframe.name(),
        matrix.spec.window,
        matrix.spec.stride
    );

    for (i, entry) in entries.iter().enumerate() {
        let row = i / cols;
        let col = i % cols;
        let cx = margin + col as f64 * cell_w + cell_w / 2.0;
        let cy = margin + title_h + row as f64 * cell_h + style.max_radius + 7.0;
        match entry {
            MatrixEntry::Entry(e) => {
                let radius = circle_radius(e.r, style.max_radius);
                if e.r != 0.0 {
                    let fill = if e.r > 0.0 {
                        &style.positive_color
                    } else {
                        &style.negative_color
                    };
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>",
                        f3(cx),
                        f3(cy),
                        f3(radius),
                        fill
                    );
                }
            }
            MatrixEntry::Undefined { .. } => {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"3 2\"/>",
                    f3(cx),
                    f3(cy),
                    f3(style.max_radius * 0.5)
                );
            }
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"{}\">{}</text>",
            f3(cx),
            f3(cy + style.max_radius + style.label_font_size + 4.0),
            f3(style.label_font_size),
            escape(entry.coin())
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// One polyline per coin of its daily average price (mean of open, high,
/// low and close), optionally min-max normalized per coin onto [0, 1].
pub fn render_trend_chart(
    panel: &AlignedPanel,
    coins: &[String],
    normalized: bool,
) -> Result<String, RenderError> {
    if coins.is_empty() {
        return Err(RenderError::EmptyMatrix);
    }
    let mut lines: Vec<(String, Vec<f64>)> = Vec::with_capacity(coins.len());
    for coin in coins {
        let idx = panel
            .coin_index(coin)
            .ok_or_else(|| RenderError::UnknownCoin(coin.clone()))?;
        let mut values = panel.ohlc_mean(idx);
        if normalized {
            values = min_max_normalize(&values)?;
        }
        lines.push((coin.clone(), values));
    }

    let (y_min, y_max) = if normalized {
        (0.0, 1.0)
    } else {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (_, values) in &lines {
            for &v in values {
                min = min.min(v);
                max = max.max(v);
            }
        }
        if min == max {
            (min - 1.0, max + 1.0)
        } else {
            (min, max)
        }
    };

    let width = 860.0;
    let height = 420.0;
    let left = 64.0;
    let right = width - 150.0;
    let top = 22.0;
    let bottom = height - 44.0;
    let n = panel.n_days();

    let x_at = |t: usize| {
        if n <= 1 {
            (left + right) / 2.0
        } else {
            left + (right - left) * t as f64 / (n - 1) as f64
        }
    };
    let y_at = |v: f64| bottom - (bottom - top) * (v - y_min) / (y_max - y_min);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        f3(width), f3(height), f3(width), f3(height)
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        f3(width),
        f3(height)
    );
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>",
        f3(left),
        f3(bottom),
        f3(right),
        f3(bottom)
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>",
        f3(left),
        f3(top),
        f3(left),
        f3(bottom)
    );
    for frac in [0.0, 0.5, 1.0] {
        let v = y_min + (y_max - y_min) * frac;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10.000\">{}</text>",
            f3(left - 6.0),
            f3(y_at(v) + 3.0),
            f3(v)
        );
    }
    if let (Some(first), Some(last)) = (panel.calendar().first(), panel.calendar().last()) {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"start\" font-family=\"sans-serif\" font-size=\"10.000\">{}</text>",
            f3(left),
            f3(bottom + 16.0),
            first.format("%Y-%m-%d")
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10.000\">{}</text>",
            f3(right),
            f3(bottom + 16.0),
            last.format("%Y-%m-%d")
        );
    }

    for (i, (coin, values)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (t, &v) in values.iter().enumerate() {
            if t > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{},{}", f3(x_at(t)), f3(y_at(v)));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{points}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
        );
        let legend_y = top + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>",
            f3(right + 12.0),
            f3(legend_y - 3.0),
            f3(right + 34.0),
            f3(legend_y - 3.0),
            color
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"start\" font-family=\"sans-serif\" font-size=\"11.000\">{}</text>",
            f3(right + 40.0),
            f3(legend_y),
            escape(coin)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
