//! A small line-chart renderer producing standalone SVG text.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
    LineMarkers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Palette index; series sharing a colour share an index.
    pub color: usize,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style, color: usize) -> Self {
        Self { label: label.into(), points, style, color }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Axis {
    pub label: String,
    pub log: bool,
}

impl Axis {
    pub fn linear(label: impl Into<String>) -> Self {
        Self { label: label.into(), log: false }
    }

    pub fn log(label: impl Into<String>) -> Self {
        Self { label: label.into(), log: true }
    }

    fn map(&self, v: f64) -> f64 {
        if self.log {
            v.log10()
        } else {
            v
        }
    }

    fn admits(&self, v: f64) -> bool {
        v.is_finite() && (!self.log || v > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Range in mapped coordinates, padded when degenerate.
fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let k = if r < 1.5 {
        1.0
    } else if r < 3.0 {
        2.0
    } else if r < 7.0 {
        5.0
    } else {
        10.0
    };
    k * mag
}

fn format_tick(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.digits$}");
    if s == "-0" || s.starts_with("-0.") && s.trim_start_matches("-0.").chars().all(|c| c == '0') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// `(mapped position, label)` pairs inside `[lo, hi]`.
fn ticks(axis: &Axis, lo: f64, hi: f64) -> Vec<(f64, String)> {
    if axis.log {
        let mut out = Vec::new();
        let decades = hi - lo;
        let mults: &[f64] = if decades > 3.0 { &[1.0] } else if decades > 1.2 { &[1.0, 2.0, 5.0] } else { &[1.0, 2.0, 3.0, 5.0, 7.0] };
        for d in (lo.floor() as i32)..=(hi.ceil() as i32) {
            for &m in mults {
                let v = m * 10f64.powi(d);
                let p = v.log10();
                if p >= lo && p <= hi {
                    let step = 10f64.powi(d);
                    out.push((p, format_tick(v, step)));
                }
            }
        }
        if out.len() >= 2 {
            return out;
        }
        // under one usable tick: fall back to evenly spaced mapped values
        let step = nice_step(hi - lo, 4);
        let mut p = (lo / step).ceil() * step;
        let mut out = Vec::new();
        while p <= hi + 1e-12 {
            let v = 10f64.powf(p);
            out.push((p, format_tick(v, v / 10.0)));
            p += step;
        }
        return out;
    }
    let step = nice_step(hi - lo, 5);
    let mut out = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi + 1e-12 * step {
        let v = k as f64 * step;
        out.push((v, format_tick(v, step)));
        k += 1;
    }
    out
}

impl LineChart {
    pub fn new(title: impl Into<String>, x: Axis, y: Axis) -> Self {
        Self { title: title.into(), x, y, series: Vec::new() }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let visible = |s: &Series| -> Vec<(f64, f64)> {
            s.points
                .iter()
                .filter(|(x, y)| self.x.admits(*x) && self.y.admits(*y))
                .map(|&(x, y)| (self.x.map(x), self.y.map(y)))
                .collect()
        };
        let mapped: Vec<Vec<(f64, f64)>> = self.series.iter().map(visible).collect();
        let (x0, x1) = span(mapped.iter().flatten().map(|p| p.0));
        let (y0, y1) = span(mapped.iter().flatten().map(|p| p.1));
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);

        for (p, label) in ticks(&self.x, x0, x1) {
            let x = px(p);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + plot_h, TOP + plot_h + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + plot_h + 18.0, escape(&label));
        }
        for (p, label) in ticks(&self.y, y0, y1) {
            let y = py(p);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, escape(&label));
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, HEIGHT - 12.0, escape(&self.x.label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0:.1}" text-anchor="middle" transform="rotate(-90 16 {0:.1})">{1}</text>"#,
            TOP + plot_h / 2.0,
            escape(&self.y.label)
        );

        for (series, pts) in self.series.iter().zip(&mapped) {
            let color = PALETTE[series.color % PALETTE.len()];
            if matches!(series.style, Style::Line | Style::Dashed | Style::LineMarkers) && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                let dash = if series.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
            }
            if matches!(series.style, Style::Markers | Style::LineMarkers) {
                for &(x, y) in pts {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
                }
            }
        }

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[series.color % PALETTE.len()];
            let y = TOP + 12.0 + 18.0 * i as f64;
            let x = WIDTH - RIGHT + 12.0;
            let dash = if series.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="1.5"{dash}/>"#, x + 22.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 28.0, y + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_every_series() {
        let chart = LineChart::new("t", Axis::linear("x"), Axis::log("y"))
            .with_series(Series::new("a", vec![(1.0, 1.0), (2.0, 10.0)], Style::Line, 0))
            .with_series(Series::new("b", vec![(1.0, 2.0), (2.0, 3.0)], Style::Dashed, 1))
            .with_series(Series::new("c <&>", vec![(1.5, 5.0)], Style::Markers, 2));
        let svg = chart.render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("c &lt;&amp;&gt;"));
        assert_eq!(svg, chart.render());
    }

    #[test]
    fn log_axis_drops_non_positive_points() {
        let chart = LineChart::new("t", Axis::log("x"), Axis::linear("y"))
            .with_series(Series::new("a", vec![(0.0, 1.0), (1.0, 1.0), (10.0, 2.0)], Style::Markers, 0));
        assert_eq!(chart.render().matches("<circle").count(), 2);
    }

    #[test]
    fn empty_chart_still_renders() {
        let svg = LineChart::new("empty", Axis::linear("x"), Axis::linear("y")).render();
        assert!(svg.contains("empty"));
    }

    #[test]
    fn linear_ticks_are_round() {
        let t = ticks(&Axis::linear(""), 0.0, 1.0);
        let labels: Vec<&str> = t.iter().map(|t| t.1.as_str()).collect();
        assert_eq!(labels, ["0.0", "0.2", "0.4", "0.6", "0.8", "1.0"]);
    }
}
