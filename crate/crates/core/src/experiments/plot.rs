//! Static log-log SVG plots of convergence tables.

use std::fmt::Write;

use super::table::CsvRow;
use super::ExperimentError;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxesSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Slopes drawn as reference triangles next to the finest data.
    pub reference_slopes: Vec<f64>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, lx: f64) -> f64 {
        LEFT + (lx - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }
    fn py(&self, ly: f64) -> f64 {
        HEIGHT - BOTTOM - (ly - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Renders the series on log-log axes. Output depends only on the input.
pub fn emit_plot(series: &[PlotSeries], axes: &AxesSpec) -> Result<String, ExperimentError> {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if pts.is_empty() {
        return Err(ExperimentError::Plot("nothing to plot".into()));
    }
    if pts.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(ExperimentError::Plot("log axes need positive finite values".into()));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let lo_x = logs.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    let hi_x = logs.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let lo_y = logs.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let hi_y = logs.iter().map(|p| p.1).fold(f64::MIN, f64::max);

    // Reference triangles spanning one halving of h below the finest data.
    let base = 2f64.log10();
    let triangles: Vec<(f64, [(f64, f64); 3])> = axes
        .reference_slopes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let x0 = lo_x + base * i as f64 * 1.5;
            let y0 = lo_y - 0.3 - s * base;
            (s, [(x0, y0), (x0 + base, y0), (x0 + base, y0 + s * base)])
        })
        .collect();
    let tri_pts = triangles.iter().flat_map(|t| t.1);
    let (mut x0, mut x1, mut y0, mut y1) = (lo_x, hi_x, lo_y, hi_y);
    for (a, b) in tri_pts {
        x0 = x0.min(a);
        x1 = x1.max(a);
        y0 = y0.min(b);
        y1 = y1.max(b);
    }
    let frame = Frame {
        x: (x0.floor(), if x1.ceil() > x0.floor() { x1.ceil() } else { x0.floor() + 1.0 }),
        y: (y0.floor(), if y1.ceil() > y0.floor() { y1.ceil() } else { y0.floor() + 1.0 }),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(&axes.title)
    );
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, r - l, b - t);
    for d in frame.x.0 as i32..=frame.x.1 as i32 {
        let x = frame.px(d as f64);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{t}" x2="{x:.2}" y2="{b}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, b + 18.0);
    }
    for d in frame.y.0 as i32..=frame.y.1 as i32 {
        let y = frame.py(d as f64);
        let _ = writeln!(s, r##"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, l - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 16.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(&axes.y_label)
    );

    for (slope, tri) in &triangles {
        let p: Vec<String> = tri.iter().map(|&(a, c)| format!("{:.2},{:.2}", frame.px(a), frame.py(c))).collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="none" stroke="black" stroke-dasharray="4 2"/>"#, p.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{slope}</text>"#,
            frame.px(tri[2].0) + 4.0,
            frame.py((tri[1].1 + tri[2].1) / 2.0) + 4.0
        );
    }

    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x.log10()), frame.py(y.log10())))
            .collect();
        if coords.len() > 1 {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
        }
        for &(x, y) in &series.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.px(x.log10()),
                frame.py(y.log10())
            );
        }
        let ly = t + 14.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/>"#, r + 10.0, r + 30.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, r + 36.0, ly + 4.0, escape(&series.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Error columns that can be plotted against `h_max`.
pub const PLOT_COLUMNS: [&str; 4] = ["err_l2", "err_h1", "err_triple", "err_p_l2"];

/// One series per (problem, k, bc_mode, column) group present in `rows`.
pub fn series_from_rows(rows: &[CsvRow], columns: &[&str]) -> Result<Vec<PlotSeries>, ExperimentError> {
    let mut out: Vec<PlotSeries> = Vec::new();
    for &col in columns {
        let get = |r: &CsvRow| match col {
            "err_l2" => Ok(r.err_l2),
            "err_h1" => Ok(r.err_h1),
            "err_triple" => Ok(r.err_triple),
            "err_p_l2" => Ok(r.err_p_l2),
            "qoi" => Ok(r.qoi.map(f64::abs)),
            "beta_h" => Ok(r.beta_h),
            "korn_h" => Ok(r.korn_h),
            _ => Err(ExperimentError::Plot(format!("unknown column `{col}`"))),
        };
        for r in rows {
            let Some(v) = get(r)? else { continue };
            let label = format!("{} k={} {} {col}", r.problem, r.k, r.bc_mode);
            match out.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((r.h_max, v)),
                None => out.push(PlotSeries { label, points: vec![(r.h_max, v)] }),
            }
        }
    }
    Ok(out)
}
