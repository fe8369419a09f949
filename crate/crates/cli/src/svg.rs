//! Hand-written SVG figures: matrix heatmaps with sector ticks, line charts
//! and state timelines.

use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use marketstates_core::{DMatrix, Sector};

use crate::error::{CliError, Result};

/// Colour scale limits of a heatmap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaletteBounds {
    /// `[-limit, limit]`.
    Symmetric(f64),
    /// `[-m, m]` with m the largest absolute off-diagonal entry.
    SymmetricAuto,
}

impl PaletteBounds {
    /// Fixed `[-1, 1]` for correlation kinds.
    pub const CORRELATION: PaletteBounds = PaletteBounds::Symmetric(1.0);

    pub fn limit(self, m: &DMatrix<f64>) -> f64 {
        match self {
            PaletteBounds::Symmetric(l) => l,
            PaletteBounds::SymmetricAuto => {
                let mut max = 0.0f64;
                for ((i, j), &v) in m.iter().enumerate().map(|(n, v)| ((n % m.nrows(), n / m.nrows()), v)) {
                    if i != j && v.is_finite() {
                        max = max.max(v.abs());
                    }
                }
                if max > 0.0 {
                    max
                } else {
                    1.0
                }
            }
        }
    }
}

/// Axis label of one matrix row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowLabel {
    pub ticker: String,
    pub sector: Option<Sector>,
}

/// Contiguous runs of rows sharing a sector: (sector, first row, end row).
pub fn sector_blocks(labels: &[RowLabel]) -> Vec<(Option<Sector>, usize, usize)> {
    let mut blocks: Vec<(Option<Sector>, usize, usize)> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if b.0 == l.sector => b.2 = i + 1,
            _ => blocks.push((l.sector, i, i + 1)),
        }
    }
    blocks
}

const LEVELS: usize = 128;

/// Blue (negative), white (zero), red (positive).
fn diverging(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    let (lo, hi) = if t < 0.0 {
        ((255.0, 255.0, 255.0), (33.0, 102.0, 172.0))
    } else {
        ((255.0, 255.0, 255.0), (178.0, 24.0, 43.0))
    };
    let a = t.abs();
    let mix = |x: f64, y: f64| (x + (y - x) * a).round() as u8;
    (mix(lo.0, hi.0), mix(lo.1, hi.1), mix(lo.2, hi.2))
}

/// Quantised colour index in `-LEVELS..=LEVELS`.
fn level(v: f64, limit: f64) -> i32 {
    if !v.is_finite() {
        return 0;
    }
    ((v / limit).clamp(-1.0, 1.0) * LEVELS as f64).round() as i32
}

fn level_colour(l: i32) -> String {
    let (r, g, b) = diverging(l as f64 / LEVELS as f64);
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Heatmap of a square matrix. Cells of equal quantised colour along a row
/// are merged into one rectangle; sector blocks get tick marks and codes on
/// both axes.
pub fn heatmap(matrix: &DMatrix<f64>, labels: &[RowLabel], bounds: PaletteBounds, title: &str) -> Result<String> {
    let k = matrix.nrows();
    if !matrix.is_square() || labels.len() != k || k == 0 {
        return Err(CliError::data(format!(
            "heatmap: {} labels for a {}x{} matrix",
            labels.len(),
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let limit = bounds.limit(matrix);
    let (left, top, size) = (60.0, 50.0, 600.0);
    let cell = size / k as f64;
    let width = left + size + 110.0;
    let height = top + size + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="25" font-size="16" text-anchor="middle">{}</text>"#,
        left + size / 2.0,
        escape(title)
    );
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for i in 0..k {
        let mut j = 0;
        while j < k {
            let l = level(matrix[(i, j)], limit);
            let mut end = j + 1;
            while end < k && level(matrix[(i, end)], limit) == l {
                end += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                left + j as f64 * cell,
                top + i as f64 * cell,
                (end - j) as f64 * cell,
                cell,
                level_colour(l)
            );
            j = end;
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let blocks = sector_blocks(labels);
    let _ = writeln!(s, r#"<g class="sector-ticks" font-size="11">"#);
    for &(sector, start, end) in &blocks {
        let code = sector.map_or("?", Sector::code);
        let edge = start as f64 * cell;
        let mid = (start + end) as f64 / 2.0 * cell;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="black"/><line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="black"/>"#,
            x = left + edge,
            y0 = top + size,
            y1 = top + size + 6.0,
            x0 = left - 6.0,
            x1 = left,
            y = top + edge
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text><text x="{:.3}" y="{:.3}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            left + mid,
            top + size + 20.0,
            escape(code),
            left - 10.0,
            top + mid,
            escape(code)
        );
    }
    let _ = writeln!(s, "</g>");
    // Colour bar.
    let (bx, bw) = (left + size + 30.0, 20.0);
    let steps = 2 * LEVELS + 1;
    let bh = size / steps as f64;
    let _ = writeln!(s, r#"<g class="colour-bar" shape-rendering="crispEdges">"#);
    for (n, l) in (-(LEVELS as i32)..=LEVELS as i32).rev().enumerate() {
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{:.3}" width="{bw}" height="{:.3}" fill="{}"/>"#,
            top + n as f64 * bh,
            bh + 0.01,
            level_colour(l)
        );
    }
    let _ = writeln!(s, "</g>");
    for (frac, value) in [(0.0, limit), (0.5, 0.0), (1.0, -limit)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="11" dominant-baseline="middle">{}</text>"#,
            bx + bw + 5.0,
            top + frac * size,
            tick_text(value)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick_text(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let text = format!("{v:.4}");
        let text = text.trim_end_matches('0').trim_end_matches('.');
        text.to_string()
    }
}

/// Horizontal axis flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Numeric,
    /// x values are days since 1970-01-01.
    Date,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    /// Line with a dot at every point.
    Points,
    /// Horizontal steps, each value held until the next point.
    Step,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
}

/// Labelled vertical line.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub label: String,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_axis: XAxis,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
    /// Only integer y ticks (state numbers, cluster counts).
    pub integer_y: bool,
}

pub fn date_x(d: NaiveDate) -> f64 {
    (d - NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")).num_days() as f64
}

fn x_date(x: f64) -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date") + chrono::Duration::days(x.round() as i64)
}

/// Roughly `target` round-number ticks covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize, integer: bool) -> Vec<f64> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let mut step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    if integer {
        step = step.max(1.0).round();
    }
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn date_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let (a, b) = (x_date(lo), x_date(hi));
    let months = (b.year() - a.year()) * 12 + b.month() as i32 - a.month() as i32;
    if months >= 24 {
        let years = b.year() - a.year();
        let step = [1, 2, 5, 10, 20].into_iter().find(|s| years / s <= 10).unwrap_or(50);
        (a.year() + 1..=b.year())
            .filter(|y| y % step == 0)
            .filter_map(|y| NaiveDate::from_ymd_opt(y, 1, 1))
            .map(|d| (date_x(d), d.year().to_string()))
            .collect()
    } else {
        let step = [1, 2, 3, 6].into_iter().find(|s| months / s <= 8).unwrap_or(12) as u32;
        let mut out = Vec::new();
        let mut d = NaiveDate::from_ymd_opt(a.year(), a.month(), 1).expect("valid date");
        while d <= b {
            if date_x(d) >= lo && (d.month() - 1) % step == 0 {
                out.push((date_x(d), d.format("%Y-%m").to_string()));
            }
            d = d.checked_add_months(chrono::Months::new(1)).expect("date in range");
        }
        out
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn chart(c: &Chart) -> String {
    let (left, top, w, h) = (70.0, 40.0, 720.0, 360.0);
    let width = left + w + 30.0;
    let height = top + h + 80.0 + 16.0 * c.series.len().saturating_sub(1) as f64;
    let xs = c.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).chain(c.markers.iter().map(|m| m.x));
    let ys = c.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|y| y.is_finite());
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.1 };
        (y0, y1) = (y0 - pad, y1 + pad);
    } else {
        let pad = (y1 - y0) * 0.05;
        (y0, y1) = (y0 - pad, y1 + pad);
    }
    if c.integer_y {
        (y0, y1) = (y0.floor(), y1.ceil());
    }
    let px = |x: f64| left + (x - x0) / (x1 - x0) * w;
    let py = |y: f64| top + h - (y - y0) / (y1 - y0) * h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
        left + w / 2.0,
        escape(&c.title)
    );
    // Axes and ticks.
    let _ = writeln!(s, r#"<g font-size="11" stroke-width="1">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    );
    let x_ticks: Vec<(f64, String)> = match c.x_axis {
        XAxis::Date => date_ticks(x0, x1),
        XAxis::Numeric => nice_ticks(x0, x1, 8, false).into_iter().map(|x| (x, tick_text(x))).collect(),
    };
    for (x, text) in x_ticks {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.3}" y1="{1}" x2="{0:.3}" y2="{2}" stroke="black"/><text x="{0:.3}" y="{3}" text-anchor="middle">{4}</text>"#,
            px(x),
            top + h,
            top + h + 5.0,
            top + h + 18.0,
            escape(&text)
        );
    }
    for y in nice_ticks(y0, y1, 6, c.integer_y) {
        let _ = writeln!(
            s,
            r##"<line x1="{0}" y1="{1:.3}" x2="{2}" y2="{1:.3}" stroke="black"/><line x1="{2}" y1="{1:.3}" x2="{3}" y2="{1:.3}" stroke="#e0e0e0"/><text x="{4}" y="{1:.3}" text-anchor="end" dominant-baseline="middle">{5}</text>"##,
            left - 5.0,
            py(y),
            left,
            left + w,
            left - 8.0,
            tick_text(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        left + w / 2.0,
        top + h + 38.0,
        escape(&c.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        top + h / 2.0,
        escape(&c.y_label)
    );
    let _ = writeln!(s, "</g>");
    // Event markers.
    for m in &c.markers {
        if m.x < x0 || m.x > x1 {
            continue;
        }
        let dash = if m.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            s,
            r##"<line x1="{0:.3}" y1="{1}" x2="{0:.3}" y2="{2}" stroke="#555555"{3}/><text x="{4:.3}" y="{5}" font-size="9" transform="rotate(-90 {4:.3} {5})" text-anchor="end">{6}</text>"##,
            px(m.x),
            top,
            top + h,
            dash,
            px(m.x) - 3.0,
            top + 4.0,
            escape(&m.label)
        );
    }
    // Data.
    for (n, series) in c.series.iter().enumerate() {
        let colour = PALETTE[n % PALETTE.len()];
        let finite: Vec<(f64, f64)> = series.points.iter().copied().filter(|p| p.1.is_finite()).collect();
        let mut path = String::new();
        for (i, &(x, y)) in finite.iter().enumerate() {
            if i == 0 {
                let _ = write!(path, "M{:.3},{:.3}", px(x), py(y));
            } else if series.style == SeriesStyle::Step {
                let _ = write!(path, " H{:.3} V{:.3}", px(x), py(y));
            } else {
                let _ = write!(path, " L{:.3},{:.3}", px(x), py(y));
            }
        }
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r#"<path d="{path}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#
            );
        }
        if series.style == SeriesStyle::Points {
            for &(x, y) in &finite {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{colour}"/>"#,
                    px(x),
                    py(y)
                );
            }
        }
        let ly = top + h + 58.0 + 16.0 * n as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{3}" stroke-width="2"/><text x="{4}" y="{1}" font-size="11" dominant-baseline="middle">{5}</text>"#,
            left,
            ly,
            left + 20.0,
            colour,
            left + 26.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
