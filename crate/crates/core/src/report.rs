//! Output helpers: CSV tables, pretty JSON and standalone SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::analysis::ConvergenceReport;
use crate::error::{Error, Result};

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// One labelled polyline of a chart.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Line chart of `log10(y)` against `x`. Non-positive `y` values are
/// clamped to the smallest positive value in the data.
pub fn svg_log_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|y| *y > 0.0 && y.is_finite()).collect();
    let floor = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1e-300 };
    let ly = |y: f64| if y > 0.0 && y.is_finite() { y.log10() } else { floor.log10() };
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let (x0, x1) = bounds(&xs);
    let lys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| ly(p.1))).collect();
    let (mut y0, mut y1) = bounds(&lys);
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| top + (y1 - y) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (w - right + left) / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    let ystep = ((y1 - y0) / 8.0).ceil().max(1.0);
    let mut t = y0;
    while t <= y1 + 1e-9 {
        let y = py(t);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, w - right);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{}</text>"#, left - 6.0, y + 4.0, t as i64);
        t += ystep;
    }
    let xstep = ((x1 - x0) / 10.0).ceil().max(1.0);
    let mut t = x0;
    while t <= x1 + 1e-9 {
        let x = px(t);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, h - bottom + 16.0, t);
        t += xstep;
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (w - right + left) / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (h - bottom + top) / 2.0,
        (h - bottom + top) / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(ly(y)))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        for &(x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(ly(y)));
        }
        let ly0 = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{ly0:.1}" x2="{:.1}" y2="{ly0:.1}" stroke="{color}" stroke-width="2"/>"#, w - right + 10.0, w - right + 30.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, w - right + 36.0, ly0 + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Chart of both error columns of a convergence report, one line per `j`.
pub fn convergence_svg(rep: &ConvergenceReport) -> String {
    let m = rep.rows.iter().map(|r| r.j).max().map_or(0, |j| j + 1);
    let mut series = Vec::new();
    for j in 0..m {
        series.push(Series { label: format!("con01 j={j}"), points: rep.series(j, false).iter().map(|&(n, e)| (n as f64, e)).collect() });
    }
    for j in 0..m {
        series.push(Series { label: format!("con00 j={j}"), points: rep.series(j, true).iter().map(|&(n, e)| (n as f64, e)).collect() });
    }
    svg_log_plot(&format!("grid sup-errors ({})", rep.backend), "n", "error", &series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_and_deterministic() {
        let ser = vec![
            Series { label: "a<b".into(), points: vec![(1.0, 1e-2), (2.0, 1e-4), (3.0, 0.0)] },
            Series { label: "c".into(), points: vec![(1.0, 0.5)] },
        ];
        let a = svg_log_plot("t", "n", "e", &ser);
        assert_eq!(a, svg_log_plot("t", "n", "e", &ser));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("a&lt;b"));
        assert!(!a.contains("NaN") && !a.contains("inf"));
        let empty = svg_log_plot("t", "n", "e", &[]);
        assert!(empty.contains("</svg>"));
    }
}
