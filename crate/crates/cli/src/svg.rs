//! Static SVG 1.1 plots written by hand.

use std::fmt::Write;

use trajrec_core::{IndicatorMask, TrajectorySet};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Maps data coordinates onto the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Frame { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn bounds(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values.into_iter().filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(svg, r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#, right - left, bottom - top);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (xp, yp) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            svg,
            r##"<line x1="{xp:.2}" y1="{bottom}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            bottom + 5.0,
            bottom + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{yp:.2}" x2="{left}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 5.0,
            left - 8.0,
            yp + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (left + right) / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );
}

fn legend(svg: &mut String, entries: &[(&str, &str, bool)]) {
    let x = WIDTH - MARGIN_RIGHT + 15.0;
    for (k, (name, color, dashed)) in entries.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * k as f64;
        let dash = if *dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            x + 24.0,
            x + 30.0,
            y + 4.0,
            escape(name)
        );
    }
}

fn polyline(svg: &mut String, points: &[(f64, f64)], color: &str, width: f64, dashed: bool) {
    if points.is_empty() {
        return;
    }
    let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
        coords.join(" ")
    );
}

pub struct Series<'a> {
    pub name: &'a str,
    /// `None` values break the line.
    pub points: Vec<(f64, Option<f64>)>,
}

/// Line chart with circular markers; one colour per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = bounds(series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1)));
    let frame = Frame::new(xs, (ys.0.min(0.0), ys.1));
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, &frame, x_label, y_label);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for run in s.points.split(|p| p.1.is_none()) {
            let pts: Vec<(f64, f64)> = run.iter().map(|(x, y)| (frame.px(*x), frame.py(y.unwrap_or_default()))).collect();
            polyline(&mut svg, &pts, color, 2.0, false);
            for (x, y) in pts {
                let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
            }
        }
    }
    let entries: Vec<(&str, &str, bool)> = series.iter().enumerate().map(|(k, s)| (s.name, PALETTE[k % PALETTE.len()], false)).collect();
    legend(&mut svg, &entries);
    svg.push_str("</svg>\n");
    svg
}

/// Bars for the first `max_bars` values, with an optional dashed threshold.
pub fn bar_chart(title: &str, y_label: &str, values: &[f64], max_bars: usize, threshold: Option<f64>) -> String {
    let shown = &values[..values.len().min(max_bars)];
    let top = bounds(shown.iter().copied().chain(threshold)).1.max(1e-12);
    let frame = Frame::new((0.5, shown.len() as f64 + 0.5), (0.0, top));
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, &frame, "index", y_label);
    let bar = 0.7 * (frame.px(1.0) - frame.px(0.0));
    for (k, v) in shown.iter().enumerate() {
        let x = frame.px(k as f64 + 1.0) - bar / 2.0;
        let (y0, y1) = (frame.py(*v), frame.py(0.0));
        let _ = writeln!(svg, r#"<rect x="{x:.2}" y="{y0:.2}" width="{bar:.2}" height="{:.2}" fill="{}"/>"#, y1 - y0, PALETTE[0]);
    }
    let mut entries = vec![("value", PALETTE[0], false)];
    if let Some(t) = threshold {
        let y = frame.py(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-dasharray="4 3"/>"#,
            WIDTH - MARGIN_RIGHT,
            PALETTE[1]
        );
        entries.push(("threshold", PALETTE[1], true));
    }
    legend(&mut svg, &entries);
    svg.push_str("</svg>\n");
    svg
}

pub struct Layer<'a> {
    pub name: &'a str,
    pub data: &'a TrajectorySet,
    /// Cells outside the mask are skipped and break the track.
    pub mask: Option<&'a IndicatorMask>,
    pub dashed: bool,
}

/// Every agent's track in the plane, one colour per layer.
pub fn trajectory_overlay(title: &str, layers: &[Layer]) -> String {
    let visible = |layer: &Layer, i: usize, t: usize| layer.mask.is_none_or(|m| m.is_observed(i, t));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for layer in layers {
        for i in 0..layer.data.agent_count() {
            for t in (0..layer.data.step_count()).filter(|&t| visible(layer, i, t)) {
                let (x, y) = layer.data.position(i, t);
                xs.push(x);
                ys.push(y);
            }
        }
    }
    let frame = Frame::new(bounds(xs), bounds(ys));
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, &frame, "x", "y");
    for (k, layer) in layers.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for i in 0..layer.data.agent_count() {
            let mut run = Vec::new();
            for t in 0..layer.data.step_count() {
                if visible(layer, i, t) {
                    let (x, y) = layer.data.position(i, t);
                    run.push((frame.px(x), frame.py(y)));
                } else {
                    polyline(&mut svg, &run, color, 1.0, layer.dashed);
                    run.clear();
                }
            }
            polyline(&mut svg, &run, color, 1.0, layer.dashed);
        }
    }
    let entries: Vec<(&str, &str, bool)> = layers.iter().enumerate().map(|(k, l)| (l.name, PALETTE[k % PALETTE.len()], l.dashed)).collect();
    legend(&mut svg, &entries);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use trajrec_core::Matrix;

    #[test]
    fn line_chart_breaks_on_missing_points() {
        let s = Series { name: "a<b", points: vec![(10.0, Some(1.0)), (20.0, None), (30.0, Some(2.0))] };
        let svg = line_chart("t", "x", "y", &[s]);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn bar_chart_truncates() {
        let svg = bar_chart("sv", "%", &[60.0, 30.0, 10.0], 2, Some(5.0));
        assert_eq!(svg.matches("<rect x=").count(), 3); // frame + 2 bars
        assert!(svg.contains("threshold"));
    }

    #[test]
    fn overlay_skips_masked_cells() {
        let x = TrajectorySet::new(Matrix::from_fn(2, 5, |r, t| (r + t) as f64)).unwrap();
        let mut mask = IndicatorMask::all_observed(1, 5);
        mask.set(0, 2, false);
        let svg = trajectory_overlay(
            "o",
            &[
                Layer { name: "truth", data: &x, mask: None, dashed: false },
                Layer { name: "fragmented", data: &x, mask: Some(&mask), dashed: true },
            ],
        );
        assert_eq!(svg.matches("<polyline").count(), 3);
    }
}
