//! Self-contained SVG rendering for sweep curves and heatmaps.
//!
//! Output is a plain string built with fixed-precision coordinates, so
//! the same input always produces the same bytes. Median curves get a
//! line with markers; the interquartile range becomes a translucent
//! band; reference values become dashed vertical lines.

use crate::harness::SweepResult;
use crate::matrix::Matrix;

/// Colors assigned to variants in order, repeating if exhausted.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 45.0;
const MARGIN_BOTTOM: f64 = 60.0;

#[derive(Debug, Clone)]
pub struct PlotConfig {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Log-scale x axis; grid points at nonpositive x are dropped.
    pub log_x: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotConfig {
    fn default() -> Self {
        PlotConfig {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            log_x: false,
            width: 800,
            height: 600,
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

struct Axis {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Axis {
    fn to_px(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        let t = if span == 0.0 {
            0.5
        } else {
            (v - self.min) / span
        };
        self.lo_px + t * (self.hi_px - self.lo_px)
    }
}

/// Evenly spaced tick values across an axis.
fn linear_ticks(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count < 2 || max <= min {
        return vec![min];
    }
    (0..count)
        .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.01..1000.0).contains(&a) {
        let s = format!("{v:.2}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.0e}")
    }
}

/// Renders the median curves and interquartile bands of a sweep.
pub fn sweep_svg(result: &SweepResult, config: &PlotConfig) -> String {
    let w = config.width as f64;
    let h = config.height as f64;
    let transform = |x: f64| if config.log_x { x.log10() } else { x };

    // Grid positions on the drawing scale, dropping what a log axis
    // cannot place.
    let points: Vec<(usize, f64)> = result
        .grid
        .iter()
        .enumerate()
        .filter(|(_, &x)| !config.log_x || x > 0.0)
        .map(|(i, &x)| (i, transform(x)))
        .collect();
    assert!(!points.is_empty(), "no drawable grid points");

    let x_min = points.iter().map(|&(_, x)| x).fold(f64::INFINITY, f64::min);
    let x_max = points
        .iter()
        .map(|&(_, x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let x_axis = Axis {
        min: x_min,
        max: x_max,
        lo_px: MARGIN_LEFT,
        hi_px: w - MARGIN_RIGHT,
    };

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for aggs in &result.aggregates {
        for &(i, _) in &points {
            y_min = y_min.min(aggs[i].q1);
            y_max = y_max.max(aggs[i].q3);
        }
    }
    let pad = 0.03 * (y_max - y_min).max(0.05);
    let y_lo = (y_min - pad).max(0.0);
    let y_hi = (y_max + pad).min(1.0);
    let y_axis = Axis {
        min: y_lo,
        max: y_hi,
        lo_px: h - MARGIN_BOTTOM,
        hi_px: MARGIN_TOP,
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">\n",
        config.width, config.height, config.width, config.height
    );
    svg.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        config.width, config.height
    ));

    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(w - MARGIN_LEFT - MARGIN_RIGHT),
        px(h - MARGIN_TOP - MARGIN_BOTTOM)
    ));

    // Ticks: powers of ten on a log axis, even spacing otherwise.
    let x_ticks: Vec<(f64, String)> = if config.log_x {
        let lo = x_min.floor() as i32;
        let hi = x_max.ceil() as i32;
        (lo..=hi)
            .map(|e| (e as f64, fmt_tick(10f64.powi(e))))
            .filter(|&(v, _)| v >= x_min - 1e-9 && v <= x_max + 1e-9)
            .collect()
    } else {
        linear_ticks(x_min, x_max, 5)
            .into_iter()
            .map(|v| (v, fmt_tick(v)))
            .collect()
    };
    for (v, label) in &x_ticks {
        let xp = x_axis.to_px(*v);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y1}\" stroke=\"#333\"/>\n",
            x = px(xp),
            y0 = px(h - MARGIN_BOTTOM),
            y1 = px(h - MARGIN_BOTTOM + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            px(xp),
            px(h - MARGIN_BOTTOM + 20.0),
            xml_escape(label)
        ));
    }
    for v in linear_ticks(y_lo, y_hi, 6) {
        let yp = y_axis.to_px(v);
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#333\"/>\n",
            x0 = px(MARGIN_LEFT - 5.0),
            x1 = px(MARGIN_LEFT),
            y = px(yp)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            px(MARGIN_LEFT - 9.0),
            px(yp + 4.0),
            fmt_tick(v)
        ));
    }

    // Dashed vertical reference lines.
    for &r in &result.reference_lines {
        let xv = transform(r);
        if config.log_x && r <= 0.0 {
            continue;
        }
        if xv < x_min || xv > x_max {
            continue;
        }
        let xp = x_axis.to_px(xv);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y1}\" stroke=\"#555\" \
             stroke-dasharray=\"5 4\"/>\n",
            x = px(xp),
            y0 = px(MARGIN_TOP),
            y1 = px(h - MARGIN_BOTTOM)
        ));
    }

    // Bands first so every line stays visible.
    for (vi, aggs) in result.aggregates.iter().enumerate() {
        let color = PALETTE[vi % PALETTE.len()];
        let mut poly = String::new();
        for &(i, xv) in &points {
            poly.push_str(&format!(
                "{},{} ",
                px(x_axis.to_px(xv)),
                px(y_axis.to_px(aggs[i].q3))
            ));
        }
        for &(i, xv) in points.iter().rev() {
            poly.push_str(&format!(
                "{},{} ",
                px(x_axis.to_px(xv)),
                px(y_axis.to_px(aggs[i].q1))
            ));
        }
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
            poly.trim_end(),
            color
        ));
    }
    for (vi, aggs) in result.aggregates.iter().enumerate() {
        let color = PALETTE[vi % PALETTE.len()];
        let mut line = String::new();
        for &(i, xv) in &points {
            line.push_str(&format!(
                "{},{} ",
                px(x_axis.to_px(xv)),
                px(y_axis.to_px(aggs[i].median))
            ));
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            line.trim_end(),
            color
        ));
        for &(i, xv) in &points {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                px(x_axis.to_px(xv)),
                px(y_axis.to_px(aggs[i].median)),
                color
            ));
        }
    }

    // Legend, top right inside the frame.
    let legend_x = w - MARGIN_RIGHT - 170.0;
    for (vi, variant) in result.variants.iter().enumerate() {
        let color = PALETTE[vi % PALETTE.len()];
        let y = MARGIN_TOP + 16.0 + 18.0 * vi as f64;
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"{c}\" stroke-width=\"2\"/>\n",
            x0 = px(legend_x),
            x1 = px(legend_x + 24.0),
            y = px(y),
            c = color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            px(legend_x + 30.0),
            px(y + 4.0),
            xml_escape(&variant.name)
        ));
    }

    // Labels and title.
    if !config.title.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"26\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            px(w / 2.0),
            xml_escape(&config.title)
        ));
    }
    if !config.x_label.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            px((MARGIN_LEFT + w - MARGIN_RIGHT) / 2.0),
            px(h - 18.0),
            xml_escape(&config.x_label)
        ));
    }
    if !config.y_label.is_empty() {
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
             transform=\"rotate(-90 18 {})\">{}</text>\n",
            px((MARGIN_TOP + h - MARGIN_BOTTOM) / 2.0),
            px((MARGIN_TOP + h - MARGIN_BOTTOM) / 2.0),
            xml_escape(&config.y_label)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn lerp_channel(a: u8, b: u8, t: f64) -> u8 {
    (a as f64 + (b as f64 - a as f64) * t).round() as u8
}

/// Linear blend from a light to a dark blue; NaN cells use `None`.
fn heat_color(t: f64) -> String {
    let lo = (0xf7, 0xfb, 0xff);
    let hi = (0x08, 0x30, 0x6b);
    let t = t.clamp(0.0, 1.0);
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp_channel(lo.0, hi.0, t),
        lerp_channel(lo.1, hi.1, t),
        lerp_channel(lo.2, hi.2, t)
    )
}

/// Renders a square matrix as a labeled heatmap. Values are normalized
/// over finite entries; NaN cells are gray and show no number.
pub fn heatmap_svg(matrix: &Matrix, title: &str) -> String {
    let n_rows = matrix.rows();
    let n_cols = matrix.cols();
    let cell = 52.0;
    let left = 50.0;
    let top = 50.0;
    let w = left + cell * n_cols as f64 + 70.0;
    let h = top + cell * n_rows as f64 + 20.0;

    let finite: Vec<f64> = matrix
        .values()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let v_min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let v_max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = |v: f64| {
        if v_max > v_min {
            (v - v_min) / (v_max - v_min)
        } else {
            0.5
        }
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n",
        w = px(w),
        h = px(h)
    );
    svg.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        px(w),
        px(h)
    ));
    if !title.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            px(left + cell * n_cols as f64 / 2.0),
            xml_escape(title)
        ));
    }

    for r in 0..n_rows {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            px(left - 8.0),
            px(top + cell * r as f64 + cell / 2.0 + 4.0),
            r
        ));
    }
    for c in 0..n_cols {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            px(left + cell * c as f64 + cell / 2.0),
            px(top - 8.0),
            c
        ));
    }

    for r in 0..n_rows {
        for c in 0..n_cols {
            let v = matrix.get(r, c);
            let x = left + cell * c as f64;
            let y = top + cell * r as f64;
            let fill = if v.is_finite() {
                heat_color(norm(v))
            } else {
                "#cccccc".to_string()
            };
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"white\"/>\n",
                px(x),
                px(y),
                px(cell),
                px(cell),
                fill
            ));
            if v.is_finite() {
                let text_color = if norm(v) > 0.55 { "white" } else { "black" };
                svg.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" fill=\"{}\">{:.2}</text>\n",
                    px(x + cell / 2.0),
                    px(y + cell / 2.0 + 4.0),
                    text_color,
                    v
                ));
            }
        }
    }

    // Color scale with extreme values, to the right of the grid.
    if v_max > v_min {
        let bar_x = left + cell * n_cols as f64 + 16.0;
        let bar_h = cell * n_rows as f64;
        let steps = 24;
        for i in 0..steps {
            let t = 1.0 - i as f64 / (steps - 1) as f64;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"{}\" fill=\"{}\"/>\n",
                px(bar_x),
                px(top + bar_h * i as f64 / steps as f64),
                px(bar_h / steps as f64 + 0.5),
                heat_color(t)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{:.2}</text>\n",
            px(bar_x + 18.0),
            px(top + 10.0),
            v_max
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{:.2}</text>\n",
            px(bar_x + 18.0),
            px(top + bar_h),
            v_min
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
