//! Fixed-layout SVG line chart of both noise curves.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::experiment::NoiseCurve;
use crate::graph::MetricKind;
use crate::nnrdcore::NnrdReport;
use crate::noise::NoiseAxis;

use super::artifacts::write_atomic;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 90.0;

fn color(axis: NoiseAxis) -> &'static str {
    match axis {
        NoiseAxis::Feature => "#1f77b4",
        NoiseAxis::Structure => "#d62728",
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Y range covering every run, padded; ROC-AUC is clamped to [0, 1].
fn y_range(report: &NnrdReport) -> (f64, f64) {
    let values = [&report.curve_feature, &report.curve_structure]
        .into_iter()
        .flat_map(|c| c.per_run.iter().flatten().copied());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.1).max(0.01);
    lo -= pad;
    hi += pad;
    if report.metric == MetricKind::RocAuc {
        lo = lo.max(0.0);
        hi = hi.min(1.0);
    } else {
        lo = lo.max(0.0);
    }
    if hi <= lo {
        hi = lo + 0.02;
    }
    (lo, hi)
}

struct Frame {
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, p: f64) -> f64 {
        LEFT + p * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = HEIGHT - TOP - BOTTOM;
        TOP + (self.y_hi - v) / (self.y_hi - self.y_lo) * span
    }
}

fn draw_curve(out: &mut String, frame: &Frame, curve: &NoiseCurve) {
    let stroke = color(curve.axis);
    let points: Vec<String> = curve
        .schedule
        .levels()
        .iter()
        .zip(&curve.mean_per_level)
        .map(|(&p, &m)| format!("{:.2},{:.2}", frame.x(p), frame.y(m)))
        .collect();
    writeln!(
        out,
        r#"  <polyline class="{}" points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
        curve.axis,
        points.join(" ")
    )
    .unwrap();
    for (&p, row) in curve.schedule.levels().iter().zip(&curve.per_run) {
        for &v in row {
            writeln!(
                out,
                r#"  <circle cx="{:.2}" cy="{:.2}" r="3" fill="{stroke}" fill-opacity="0.5"/>"#,
                frame.x(p),
                frame.y(v)
            )
            .unwrap();
        }
    }
}

/// Caption line shared with the console summary.
pub fn caption(report: &NnrdReport) -> String {
    format!("NNRD = {:.3}, NNRD_e = {:.3}", report.nnrd, report.nnrd_e)
}

pub fn svg_plot(report: &NnrdReport) -> String {
    let (y_lo, y_hi) = y_range(report);
    let frame = Frame { y_lo, y_hi };
    let (x0, x1) = (frame.x(0.0), frame.x(1.0));
    let (y0, y1) = (frame.y(y_lo), frame.y(y_hi));
    let metric = report.metric.as_str();

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"  <text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&report.dataset)
    )
    .unwrap();

    // axes
    writeln!(
        out,
        r#"  <line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"  <line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    )
    .unwrap();
    for i in 0..=5 {
        let p = i as f64 / 5.0;
        let x = frame.x(p);
        writeln!(
            out,
            r#"  <line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 4.0
        )
        .unwrap();
        writeln!(
            out,
            r#"  <text x="{x:.2}" y="{:.2}" text-anchor="middle">{p:.1}</text>"#,
            y0 + 18.0
        )
        .unwrap();
        let v = y_lo + (y_hi - y_lo) * p;
        let y = frame.y(v);
        writeln!(
            out,
            r#"  <line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 4.0
        )
        .unwrap();
        writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            x0 - 8.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" text-anchor="middle">noise fraction p</text>"#,
        (x0 + x1) / 2.0,
        y0 + 36.0
    )
    .unwrap();
    writeln!(
        out,
        r#"  <text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{metric}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();

    draw_curve(&mut out, &frame, &report.curve_feature);
    draw_curve(&mut out, &frame, &report.curve_structure);

    // legend
    for (i, axis) in NoiseAxis::BOTH.into_iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let lx = x1 - 150.0;
        writeln!(
            out,
            r#"  <rect x="{lx:.2}" y="{:.2}" width="24" height="4" fill="{}"/>"#,
            y - 2.0,
            color(axis)
        )
        .unwrap();
        writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}">{axis} noise</text>"#,
            lx + 30.0,
            y + 4.0
        )
        .unwrap();
    }

    writeln!(
        out,
        r#"  <text class="caption" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        caption(report)
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Writes the chart: both mean curves as polylines, one circle per run,
/// a legend and a caption with NNRD and NNRD_e.
pub fn render_svg_plot(report: &NnrdReport, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), svg_plot(report).as_bytes())
}
