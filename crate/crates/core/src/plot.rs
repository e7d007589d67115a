//! Dependency-free SVG charts: accuracy curves with confidence bands, and
//! heatmaps for spectrograms and confusion matrices.

use std::fmt::Write as _;

use crate::extractor::Spectrogram;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for e in lo.log10().floor() as i32..=hi.log10().ceil() as i32 {
        for m in [1.0, 2.0, 5.0] {
            let v = m * 10f64.powi(e);
            if v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9) {
                out.push(v);
            }
        }
    }
    out
}

/// Mean accuracy (fractions) against a swept parameter, with the interval drawn as a band.
pub fn line_chart_svg(title: &str, x_label: &str, points: &[CurvePoint], log_x: bool) -> String {
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT, title);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let mut pts: Vec<CurvePoint> = points
        .iter()
        .copied()
        .filter(|p| p.x.is_finite() && (!log_x || p.x > 0.0))
        .collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));

    let tx = |v: f64| if log_x { v.log10() } else { v };
    let (mut x0, mut x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)));
    if !x0.is_finite() {
        (x0, x1) = if log_x { (1.0, 10.0) } else { (0.0, 1.0) };
    }
    if x0 == x1 {
        (x0, x1) = if log_x { (x0 / 2.0, x1 * 2.0) } else { (x0 - 1.0, x1 + 1.0) };
    }
    let sx = |v: f64| LEFT + (tx(v) - tx(x0)) / (tx(x1) - tx(x0)) * pw;
    let sy = |v: f64| TOP + (1.0 - v.clamp(0.0, 1.0)) * ph;

    // Axes and grid.
    for t in linear_ticks(0.0, 1.0) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(100.0 * t)
        );
    }
    let xt = if log_x { log_ticks(x0, x1) } else { linear_ticks(x0, x1) };
    for t in xt {
        let x = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 18.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">accuracy (%)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    if !pts.is_empty() {
        let mut band = String::new();
        for p in &pts {
            let _ = write!(band, "{:.2},{:.2} ", sx(p.x), sy(p.high));
        }
        for p in pts.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(p.x), sy(p.low));
        }
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
            band.trim_end()
        );
        let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.mean))).collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
            line.join(" ")
        );
        for p in &pts {
            let _ = writeln!(
                out,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"><title>{}: {:.2}% [{:.2}, {:.2}]</title></circle>"##,
                sx(p.x),
                sy(p.mean),
                fmt_tick(p.x),
                100.0 * p.mean,
                100.0 * p.low,
                100.0 * p.high
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Piecewise-linear approximation of the viridis colormap on `[0, 1]`.
fn color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - i as f64;
    let mix = |a: f64, b: f64| (a + f * (b - a)).round() as u8;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    /// Row-major; row 0 is drawn at the top.
    pub values: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Print each cell's value inside it.
    pub annotate: bool,
}

pub fn heatmap_svg(h: &Heatmap) -> String {
    assert_eq!(h.values.len(), h.rows * h.cols, "heatmap values do not match shape");
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT, h.title);
    let (pw, ph) = (WIDTH - LEFT - RIGHT - 60.0, HEIGHT - TOP - BOTTOM);
    let (cw, rh) = (pw / h.cols.max(1) as f64, ph / h.rows.max(1) as f64);
    let finite = h.values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };

    for r in 0..h.rows {
        for c in 0..h.cols {
            let v = h.values[r * h.cols + c];
            let (x, y) = (LEFT + c as f64 * cw, TOP + r as f64 * rh);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cw + 0.05,
                rh + 0.05,
                color(scale(v))
            );
            if h.annotate {
                let ink = if scale(v) > 0.6 { "black" } else { "white" };
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10" fill="{ink}">{}</text>"#,
                    x + cw / 2.0,
                    y + rh / 2.0 + 3.5,
                    fmt_tick(v)
                );
            }
        }
    }
    let label_every = |n: usize| n.div_ceil(12).max(1);
    for (r, l) in h.row_labels.iter().enumerate().step_by(label_every(h.rows)) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            LEFT - 4.0,
            TOP + (r as f64 + 0.5) * rh + 3.5,
            escape(l)
        );
    }
    for (c, l) in h.col_labels.iter().enumerate().step_by(label_every(h.cols)) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            LEFT + (c as f64 + 0.5) * cw,
            TOP + ph + 14.0,
            escape(l)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(h.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(h.y_label)
    );
    // Color bar.
    let bx = LEFT + pw + 20.0;
    for i in 0..50 {
        let t = 1.0 - i as f64 / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.1}" y="{:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            TOP + i as f64 * ph / 50.0,
            ph / 50.0 + 0.05,
            color(t)
        );
    }
    if lo.is_finite() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            bx + 18.0,
            TOP + 8.0,
            fmt_tick(hi),
            bx + 18.0,
            TOP + ph,
            fmt_tick(lo)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Channels on the vertical axis with the lowest center at the bottom.
pub fn spectrogram_svg<T: Scalar>(s: &Spectrogram<T>, title: &str) -> String {
    let rows = s.n_channels;
    let values: Vec<f64> = (0..rows)
        .rev()
        .flat_map(|c| s.row(c).iter().map(|v| v.to_f64_lossy()))
        .collect();
    let row_labels = (0..rows)
        .rev()
        .map(|c| match s.channel_centers_hz.get(c) {
            Some(f) => format!("{f:.0} Hz"),
            None => format!("ch {c}"),
        })
        .collect();
    let hop = if s.frame_hop_ms > 0.0 { s.frame_hop_ms } else { 1.0 };
    let col_labels = (0..s.n_frames).map(|f| fmt_tick(f as f64 * hop / 1000.0)).collect();
    heatmap_svg(&Heatmap {
        title,
        values: &values,
        rows,
        cols: s.n_frames,
        row_labels,
        col_labels,
        x_label: if s.frame_hop_ms > 0.0 { "time (s)" } else { "frame" },
        y_label: "channel center",
        annotate: false,
    })
}

/// Row-normalized confusion matrix, rows are true classes.
pub fn confusion_svg(confusion: &[Vec<usize>], labels: &[&str], title: &str) -> String {
    let n = confusion.len();
    let values: Vec<f64> = confusion
        .iter()
        .flat_map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(move |&v| if total > 0 { (100.0 * v as f64 / total as f64).round() } else { 0.0 })
        })
        .collect();
    let names: Vec<String> = (0..n)
        .map(|i| labels.get(i).map_or_else(|| i.to_string(), |l| (*l).to_owned()))
        .collect();
    heatmap_svg(&Heatmap {
        title,
        values: &values,
        rows: n,
        cols: n,
        row_labels: names.clone(),
        col_labels: names,
        x_label: "predicted class",
        y_label: "true class (% of row)",
        annotate: true,
    })
}
