//! Minimal deterministic SVG line charts for trace and profile files.
//!
//! Hand-rolled on purpose: a few polylines with fixed formatting keep the
//! output byte-stable across runs, which the artifact promises for
//! everything it writes.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// One named series.
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    /// Dashed lines mark reference curves (barriers, bounds).
    pub dashed: bool,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

const W: f64 = 860.0;
const H: f64 = 560.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f",
];

impl LineChart {
    pub fn render(&self) -> Result<String> {
        let map = |v: f64, scale: Scale| -> Option<f64> {
            match scale {
                Scale::Linear => Some(v),
                Scale::Log => (v > 0.0).then(|| v.log10()),
            }
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if let (Some(mx), Some(my)) = (map(x, self.x_scale), map(y, self.y_scale)) {
                    xs.push(mx);
                    ys.push(my);
                }
            }
        }
        if xs.is_empty() {
            return Err(Error::InvalidParam("chart has no drawable points".into()));
        }
        let (x0, x1) = bounds(&xs);
        let (y0, y1) = bounds(&ys);
        let px = |v: f64| MARGIN_L + (v - x0) / (x1 - x0) * (W - MARGIN_L - MARGIN_R);
        let py = |v: f64| H - MARGIN_B - (v - y0) / (y1 - y0) * (H - MARGIN_T - MARGIN_B);

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
             text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            escape(&self.title)
        ));
        // frame
        out.push_str(&format!(
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" \
             stroke=\"#333\"/>\n",
            W - MARGIN_L - MARGIN_R,
            H - MARGIN_T - MARGIN_B
        ));
        // axis ticks: 5 per axis in mapped coordinates
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let lx = tick_label(fx, self.x_scale);
            let ly = tick_label(fy, self.y_scale);
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"middle\">{}</text>\n",
                px(fx),
                H - MARGIN_B + 16.0,
                lx
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"end\">{}</text>\n",
                MARGIN_L - 6.0,
                py(fy) + 4.0,
                ly
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
             text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            H - 12.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
             text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        ));

        for (si, s) in self.series.iter().enumerate() {
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                match (map(x, self.x_scale), map(y, self.y_scale)) {
                    (Some(mx), Some(my)) => {
                        let cmd = if pen_down { 'L' } else { 'M' };
                        path.push_str(&format!("{cmd}{:.2} {:.2} ", px(mx), py(my)));
                        pen_down = true;
                    }
                    _ => pen_down = false,
                }
            }
            let dash = if s.dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            out.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n",
                path.trim_end(),
                s.color,
                dash
            ));
            // legend
            let ly = MARGIN_T + 16.0 + 16.0 * si as f64;
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{ly:.1}\" x2=\"{}\" y2=\"{ly:.1}\" stroke=\"{}\" \
                 stroke-width=\"2\"{dash}/>\n",
                MARGIN_L + 8.0,
                MARGIN_L + 34.0,
                s.color
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                MARGIN_L + 40.0,
                ly + 4.0,
                escape(&s.name)
            ));
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn tick_label(mapped: f64, scale: Scale) -> String {
    match scale {
        Scale::Linear => format!("{mapped:.3e}"),
        Scale::Log => format!("1e{mapped:.2}"),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
