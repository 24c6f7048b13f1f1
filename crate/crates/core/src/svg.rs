//! Self-contained SVG line charts (no plotting runtime).
//!
//! Output is deterministic: fixed layout constants, a fixed palette, and
//! pinned numeric formatting for coordinates and tick labels.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#7f7f7f"];

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 42.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Plot log10 of the data on both axes (convergence plots).
    pub log_log: bool,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Panel {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            log_log: false,
        }
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.to_string(), points });
        self
    }
}

/// Short deterministic label: up to 6 significant digits, trailing zeros
/// trimmed.
fn label_fmt(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{v:.6e}");
    // round-trip through the exponent form to get a compact decimal
    let reparsed: f64 = formatted.parse().unwrap_or(v);
    let abs = reparsed.abs();
    if (1e-4..1e7).contains(&abs) {
        let s = format!("{reparsed:.6}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        formatted
    }
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Tick positions: a 1/2/5·10^k step covering [lo, hi] with ~5 ticks.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let usable = span.is_finite() && span > 0.0;
    if !usable {
        return vec![lo];
    }
    let raw_step = span / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let norm = raw_step / mag;
    let step = if norm <= 1.0 {
        mag
    } else if norm <= 2.0 {
        2.0 * mag
    } else if norm <= 5.0 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (lo / step).ceil();
    let mut out = Vec::new();
    let mut k = first;
    while k * step <= hi + step * 1e-9 {
        out.push(k * step);
        k += 1.0;
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render stacked panels into one SVG document.
pub fn render_panels(panels: &[Panel], width: u32, panel_height: u32) -> String {
    let total_height = panel_height as f64 * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{total_height}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    for (idx, panel) in panels.iter().enumerate() {
        let top = idx as f64 * panel_height as f64;
        render_panel(&mut svg, panel, top, width as f64, panel_height as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_panel(svg: &mut String, panel: &Panel, top: f64, width: f64, height: f64) {
    let plot_w = width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;
    let origin_x = MARGIN_LEFT;
    let origin_y = top + MARGIN_TOP + plot_h;

    // transform data, dropping non-positive points in log mode
    let transform = |p: (f64, f64)| -> Option<(f64, f64)> {
        if panel.log_log {
            if p.0 > 0.0 && p.1 > 0.0 {
                Some((p.0.log10(), p.1.log10()))
            } else {
                None
            }
        } else {
            Some(p)
        }
    };

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in &panel.series {
        for &p in &s.points {
            if let Some((x, y)) = transform(p) {
                if x.is_finite() && y.is_finite() {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
    }
    let (mut x_lo, mut x_hi) = min_max(&xs);
    let (mut y_lo, mut y_hi) = min_max(&ys);
    if x_hi <= x_lo || !(x_hi - x_lo).is_finite() {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_hi <= y_lo || !(y_hi - y_lo).is_finite() {
        let pad = if y_lo == 0.0 { 0.5 } else { y_lo.abs() * 0.1 };
        y_lo -= pad;
        y_hi += pad;
    }
    // headroom
    let y_pad = (y_hi - y_lo) * 0.05;
    y_lo -= y_pad;
    y_hi += y_pad;

    let sx = move |x: f64| origin_x + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = move |y: f64| origin_y - (y - y_lo) / (y_hi - y_lo) * plot_h;

    // frame and title
    let _ = writeln!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>",
        coord(origin_x),
        coord(top + MARGIN_TOP),
        coord(plot_w),
        coord(plot_h)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-weight=\"bold\">{}</text>",
        coord(origin_x + plot_w / 2.0),
        coord(top + 20.0),
        escape(&panel.title)
    );

    // ticks and grid
    for t in ticks(x_lo, x_hi) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#ddd\"/>",
            coord(x),
            coord(top + MARGIN_TOP),
            coord(origin_y)
        );
        let label = if panel.log_log {
            format!("1e{}", label_fmt(t))
        } else {
            label_fmt(t)
        };
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            coord(x),
            coord(origin_y + 16.0),
            label
        );
    }
    for t in ticks(y_lo, y_hi) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#ddd\"/>",
            coord(origin_x),
            coord(origin_x + plot_w),
            coord(y)
        );
        let label = if panel.log_log {
            format!("1e{}", label_fmt(t))
        } else {
            label_fmt(t)
        };
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            coord(origin_x - 6.0),
            coord(y + 4.0),
            label
        );
    }

    // axis labels
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        coord(origin_x + plot_w / 2.0),
        coord(top + height - 8.0),
        escape(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
        coord(14.0),
        coord(top + MARGIN_TOP + plot_h / 2.0),
        coord(14.0),
        coord(top + MARGIN_TOP + plot_h / 2.0),
        escape(&panel.y_label)
    );

    // series
    for (si, series) in panel.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &p in &series.points {
            match transform(p) {
                Some((x, y)) if x.is_finite() && y.is_finite() => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(path, "{cmd}{} {} ", coord(sx(x)), coord(sy(y)));
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        if !path.is_empty() {
            let _ = writeln!(
                svg,
                "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
                path.trim_end(),
                color
            );
        }
        // legend entry
        let lx = origin_x + plot_w - 150.0;
        let ly = top + MARGIN_TOP + 16.0 + si as f64 * 16.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>",
            coord(lx),
            coord(ly - 4.0),
            coord(lx + 18.0),
            coord(ly - 4.0),
            color
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            coord(lx + 24.0),
            coord(ly),
            escape(&series.label)
        );
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if values.is_empty() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}
