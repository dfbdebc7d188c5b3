//! Bare-bones SVG line plots: stacked panels sharing one time axis.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 120.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 30.0;
/// Longest polyline emitted per series; denser data is decimated.
const MAX_POINTS: usize = 2000;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>, series: Vec<Series>) -> Self {
        Panel {
            title: title.into(),
            series,
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Render `panels` against `times` as a standalone SVG document.
pub fn render(times: &[f64], panels: &[Panel]) -> String {
    let height = panels.len() as f64 * PANEL_HEIGHT;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (t0, t1) = range(times.iter().copied());
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let step = (times.len() / MAX_POINTS).max(1);

    for (p, panel) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_HEIGHT + MARGIN_TOP;
        let (y0, y1) = range(panel.series.iter().flat_map(|s| s.values.iter().copied()));
        let sx = |t: f64| MARGIN_LEFT + (t - t0) / (t1 - t0) * pw;
        let sy = |v: f64| top + ph - (v - y0) / (y1 - y0) * ph;

        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_LEFT}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            top - 8.0,
            escape(&panel.title)
        );
        for (v, y) in [(y0, top + ph), (y1, top)] {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#,
                MARGIN_LEFT - 5.0,
                y + 4.0
            );
        }
        for (t, anchor) in [(t0, "start"), (t1, "end")] {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="{anchor}">{t:.2} s</text>"#,
                sx(t),
                top + ph + 15.0
            );
        }
        for (k, s) in panel.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut points = String::new();
            for (t, v) in times.iter().zip(&s.values).step_by(step) {
                if v.is_finite() {
                    let _ = write!(points, "{:.2},{:.2} ", sx(*t), sy(*v));
                }
            }
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                points.trim_end()
            );
            let ly = top + 12.0 + 14.0 * k as f64;
            let lx = MARGIN_LEFT + pw + 10.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 16.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
