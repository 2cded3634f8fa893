//! Minimal self-contained SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Abscissae marked with dashed vertical lines (e.g. zero crossings).
    pub markers: Vec<f64>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 55.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

/// Renders the plot as an SVG document.
pub fn render(plot: &Plot) -> Result<String, String> {
    if plot.series.is_empty() || plot.series.iter().any(|s| s.points.len() < 2) {
        return Err("every plot series needs at least 2 points".into());
    }
    let tx = |v: f64| if plot.log_x { v.log10() } else { v };
    let ty = |v: f64| if plot.log_y { v.log10() } else { v };
    let pts: Vec<Vec<(f64, f64)>> = plot
        .series
        .iter()
        .map(|s| s.points.iter().map(|&(x, y)| (tx(x), ty(y))).filter(|p| p.0.is_finite() && p.1.is_finite()).collect())
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0.is_finite() && y0.is_finite()) {
        return Err("no finite points to plot".into());
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let (l, r, t, b) = MARGIN;
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (W - l - r);
    let py = |y: f64| H - b - (y - y0) / (y1 - y0) * (H - t - b);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&plot.title));
    let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - l - r, H - t - b);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let lx = if plot.log_x { 10f64.powf(fx) } else { fx };
        let ly = if plot.log_y { 10f64.powf(fy) } else { fy };
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, px(fx), H - b + 16.0, fmt_tick(lx));
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, py(fy) + 4.0, fmt_tick(ly));
    }
    let scale = |log: bool| if log { " (log)" } else { "" };
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#, (W + l - r) / 2.0, H - 12.0, escape(&plot.x_label), scale(plot.log_x));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}{2}</text>"#,
        (H + t - b) / 2.0,
        escape(&plot.y_label),
        scale(plot.log_y)
    );
    for &m in &plot.markers {
        let m = tx(m);
        if m >= x0 && m <= x1 {
            let _ = writeln!(s, r##"<line x1="{0:.1}" x2="{0:.1}" y1="{t}" y2="{1}" stroke="#888" stroke-dasharray="4 3"/>"##, px(m), H - b);
        }
    }
    for (k, (series, p)) in plot.series.iter().zip(&pts).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for &(x, y) in p {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, l + 10.0, t + 16.0 + 15.0 * k as f64, escape(&series.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes the plot to `path`.
pub fn emit_plot(plot: &Plot, path: &Path) -> Result<(), String> {
    let svg = render(plot)?;
    std::fs::write(path, svg).map_err(|e| format!("cannot write `{}`: {e}", path.display()))
}
