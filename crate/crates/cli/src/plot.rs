//! Minimal SVG charts: line plots, scatter plots with a y = x reference, and
//! bar histograms.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 48.0;
const TICKS: usize = 5;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Largest number of points drawn per scatter plot; longer series are
/// thinned with a fixed stride.
pub const MAX_SCATTER_POINTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YScale {
    Linear,
    Log10,
}

#[derive(Debug, Clone)]
pub struct Series<'a> {
    pub name: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    y_scale: YScale,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64), y_scale: YScale) -> Self {
        Self {
            x: widen(x),
            y: widen(y),
            y_scale,
        }
    }

    fn px(&self, v: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * w
    }

    fn py(&self, v: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (self.ty(v) - self.y.0) / (self.y.1 - self.y.0) * h
    }

    fn ty(&self, v: f64) -> f64 {
        match self.y_scale {
            YScale::Linear => v,
            YScale::Log10 => v.max(f64::MIN_POSITIVE).log10(),
        }
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn extent<'a>(values: impl IntoIterator<Item = &'a f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1},{y1:.1}V{y0:.1}H{x1:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let px = f.px(xv);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 4.0,
            y0 + 16.0,
            tick_label(xv)
        );
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let py = HEIGHT - MARGIN_BOTTOM - t * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
        let label = match f.y_scale {
            YScale::Linear => tick_label(yv),
            YScale::Log10 => tick_label(10f64.powf(yv)),
        };
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
    s
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN_TOP + 8.0 + 14.0 * i as f64;
        let x = WIDTH - MARGIN_RIGHT - 120.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="3" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 4.0,
            PALETTE[i % PALETTE.len()],
            x + 14.0,
            y,
            escape(name)
        );
    }
}

fn polyline(f: &Frame, xs: &[f64], ys: &[f64]) -> String {
    let mut d = String::new();
    let mut pen_down = false;
    for (x, y) in xs.iter().zip(ys) {
        if !(x.is_finite() && y.is_finite()) || (f.y_scale == YScale::Log10 && *y <= 0.0) {
            pen_down = false;
            continue;
        }
        let _ = write!(
            d,
            "{}{:.2},{:.2}",
            if pen_down { "L" } else { "M" },
            f.px(*x),
            f.py(*y)
        );
        pen_down = true;
    }
    d
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series<'_>], y_scale: YScale) -> String {
    let x = extent(series.iter().flat_map(|s| s.xs));
    let y = match y_scale {
        YScale::Linear => extent(series.iter().flat_map(|s| s.ys)),
        YScale::Log10 => {
            let (lo, hi) = extent(series.iter().flat_map(|s| s.ys).filter(|v| **v > 0.0));
            (lo.log10(), hi.log10())
        }
    };
    let f = Frame::new(x, y, y_scale);
    let mut s = open(title, xlabel, ylabel, &f);
    for (i, ser) in series.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<path class="series" d="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
            polyline(&f, ser.xs, ser.ys),
            PALETTE[i % PALETTE.len()]
        );
    }
    legend(&mut s, &series.iter().map(|s| s.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Scatter of `(truth, pred)` with the y = x line across `range`.
pub fn scatter_plot(title: &str, truth: &[f64], pred: &[f64], range: (f64, f64)) -> String {
    let f = Frame::new(range, range, YScale::Linear);
    let mut s = open(title, "ground truth", "prediction", &f);
    let stride = truth.len().div_ceil(MAX_SCATTER_POINTS).max(1);
    for (x, y) in truth.iter().zip(pred).step_by(stride) {
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="1.3" fill="{}" fill-opacity="0.5"/>"#,
            f.px(*x),
            f.py(*y),
            PALETTE[0]
        );
    }
    let _ = writeln!(
        s,
        r#"<line class="identity" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="1.5"/>"#,
        f.px(range.0),
        f.py(range.0),
        f.px(range.1),
        f.py(range.1)
    );
    s.push_str("</svg>\n");
    s
}

/// One bar per bin; `edges` has `heights.len() + 1` entries.
pub fn bar_plot(title: &str, xlabel: &str, ylabel: &str, edges: &[f64], heights: &[f64]) -> String {
    bar_chart(title, xlabel, ylabel, edges, heights, None)
}

/// Bars for `heights` with a reference curve through the bin centres.
pub fn bar_plot_with_reference(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    edges: &[f64],
    heights: &[f64],
    reference: &[f64],
) -> String {
    bar_chart(title, xlabel, ylabel, edges, heights, Some(reference))
}

fn bar_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    edges: &[f64],
    heights: &[f64],
    reference: Option<&[f64]>,
) -> String {
    let x = (edges[0], edges[edges.len() - 1]);
    let top = extent(heights.iter().chain(reference.unwrap_or(&[]))).1;
    let f = Frame::new(x, (0.0, top.max(0.0)), YScale::Linear);
    let mut s = open(title, xlabel, ylabel, &f);
    for (i, h) in heights.iter().enumerate() {
        let (l, r) = (f.px(edges[i]), f.px(edges[i + 1]));
        let (yt, yb) = (f.py(*h), f.py(0.0));
        let _ = writeln!(
            s,
            r#"<rect class="bar" x="{l:.2}" y="{yt:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="white" stroke-width="0.3"/>"#,
            (r - l).max(0.0),
            (yb - yt).max(0.0),
            PALETTE[0]
        );
    }
    if let Some(reference) = reference {
        let centers: Vec<f64> = edges.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        let _ = writeln!(
            s,
            r#"<path class="reference" d="{}" fill="none" stroke="red" stroke-width="1.5"/>"#,
            polyline(&f, &centers, reference)
        );
    }
    s.push_str("</svg>\n");
    s
}
