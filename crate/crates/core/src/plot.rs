//! Static SVG line chart of mean generalization error against λ, one series
//! per fake-feature count. Both axes are log10; rows with λ = 0 or a
//! non-positive error cannot be placed and are skipped.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::report::SweepCsvRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Empirical,
    Analytic,
}

impl Metric {
    fn value(self, row: &SweepCsvRow) -> Option<f64> {
        match self {
            Metric::Empirical => row.jy_empirical_mean,
            Metric::Analytic => Some(row.jy_analytic_mean),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Empirical => "mean empirical J_y",
            Metric::Analytic => "mean analytic J_y",
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    /// Log10 range covering `values`, padded to whole decades.
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let l = v.log10();
            (lo.min(l), hi.max(l))
        });
        let (mut lo, mut hi) = (lo.floor(), hi.ceil());
        if hi - lo < 1.0 {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v.log10() - self.lo) / (self.hi - self.lo)
    }

    fn decades(&self) -> impl Iterator<Item = i32> {
        (self.lo.ceil() as i32)..=(self.hi.floor() as i32)
    }
}

fn x_px(axis: &Axis, v: f64) -> f64 {
    LEFT + axis.frac(v) * (WIDTH - LEFT - RIGHT)
}

fn y_px(axis: &Axis, v: f64) -> f64 {
    HEIGHT - BOTTOM - axis.frac(v) * (HEIGHT - TOP - BOTTOM)
}

fn decade_label(d: i32) -> String {
    match d {
        0 => "1".into(),
        1 => "10".into(),
        _ => format!("1e{d}"),
    }
}

/// Renders the chart. Output depends only on `rows` and `metric`.
pub fn render_svg(rows: &[SweepCsvRow], metric: Metric) -> Result<String> {
    let mut series: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows {
        let value = metric.value(row).ok_or_else(|| {
            Error::Config(format!("row p_fake={} lambda={} has no {}", row.p_fake, row.lambda, metric.label()))
        })?;
        if row.lambda > 0.0 && value > 0.0 && value.is_finite() {
            series.entry(row.p_fake).or_default().push((row.lambda, value));
        }
    }
    if series.is_empty() {
        return Err(Error::Config("no rows with lambda > 0 and a positive error to plot".into()));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all = || series.values().flatten();
    let x_axis = Axis::fit(all().map(|p| p.0));
    let y_axis = Axis::fit(all().map(|p| p.1));

    let mut svg = String::new();
    let w = &mut svg;
    // Writing to a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(w, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);

    for d in x_axis.decades() {
        let x = x_px(&x_axis, 10f64.powi(d));
        let _ = writeln!(w, r##"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{y0}" stroke="#dddddd"/>"##);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, decade_label(d));
    }
    for d in y_axis.decades() {
        let y = y_px(&y_axis, 10f64.powi(d));
        let _ = writeln!(w, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, decade_label(d));
    }
    let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">ridge parameter λ</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        metric.label()
    );

    for (k, (p_fake, points)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> =
            points.iter().map(|&(l, v)| format!("{:.2},{:.2}", x_px(&x_axis, l), y_px(&y_axis, v))).collect();
        if coords.len() > 1 {
            let _ = writeln!(w, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        }
        for &(l, v) in points {
            let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, x_px(&x_axis, l), y_px(&y_axis, v));
        }
        let ly = y1 + 20.0 + 20.0 * k as f64;
        let _ = writeln!(w, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, x1 + 15.0, x1 + 40.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">p_F = {p_fake}</text>"#, x1 + 46.0, ly + 4.0);
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
