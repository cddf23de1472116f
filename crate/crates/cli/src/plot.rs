//! Minimal SVG line plots for run outputs.
//!
//! Hand-rolled on purpose: three polyline charts with axes, ticks and a
//! legend cover everything the run artifacts need, and the output stays
//! dependency-free and diffable.

use std::path::Path;

use anyhow::{bail, Result};
use netpin_core::simulate::TrajectoryRecord;

use crate::output::write_atomic;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl LinePlot {
    pub fn render(&self) -> String {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    x_min = x_min.min(x);
                    x_max = x_max.max(x);
                    y_min = y_min.min(y);
                    y_max = y_max.max(y);
                }
            }
        }
        if !x_min.is_finite() || !y_min.is_finite() {
            x_min = 0.0;
            x_max = 1.0;
            y_min = 0.0;
            y_max = 1.0;
        }
        if (x_max - x_min).abs() < f64::EPSILON {
            x_max = x_min + 1.0;
        }
        if (y_max - y_min).abs() < f64::EPSILON {
            y_max = y_min + 1.0;
        }
        // A little vertical headroom.
        let pad = 0.05 * (y_max - y_min);
        y_min -= pad;
        y_max += pad;

        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = move |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
        let sy = move |y: f64| MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_L + plot_w / 2.0,
            escape(&self.title)
        ));

        // Axes frame and ticks.
        out.push_str(&format!(
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
             fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n"
        ));
        for i in 0..=5 {
            let fx = x_min + (x_max - x_min) * i as f64 / 5.0;
            let px = sx(fx);
            out.push_str(&format!(
                "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"#333\"/>\n",
                MARGIN_T + plot_h,
                MARGIN_T + plot_h + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{px}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                MARGIN_T + plot_h + 18.0,
                tick_label(fx)
            ));
            let fy = y_min + (y_max - y_min) * i as f64 / 5.0;
            let py = sy(fy);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{py}\" x2=\"{MARGIN_L}\" y2=\"{py}\" stroke=\"#333\"/>\n",
                MARGIN_L - 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                MARGIN_L - 8.0,
                py + 4.0,
                tick_label(fy)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_L + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
             transform=\"rotate(-90 18 {})\">{}</text>\n",
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0,
            escape(&self.y_label)
        ));

        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\"{dash} \
                 points=\"{}\"/>\n",
                pts.join(" ")
            ));
            let ly = MARGIN_T + 14.0 + 16.0 * si as f64;
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
                 stroke-width=\"2\"{dash}/>\n",
                WIDTH - MARGIN_R + 10.0,
                WIDTH - MARGIN_R + 34.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
                WIDTH - MARGIN_R + 40.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Floor applied before log-scaling error norms, so exact zeros stay
/// plottable.
const LOG_FLOOR: f64 = 1e-300;

/// Emits the three standard charts: state traces vs reference, per-node
/// error norms on a log scale, and control inputs.
pub fn emit_plots(record: &TrajectoryRecord, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if record.is_empty() {
        bail!("refusing to plot an empty trajectory record");
    }
    let (n, p) = (record.n, record.p);
    let times = &record.times;

    let mut state_series = Vec::new();
    for i in 0..n {
        for k in 0..p {
            state_series.push(Series {
                label: format!("x[{}][{}]", i + 1, k + 1),
                points: times
                    .iter()
                    .zip(&record.states)
                    .map(|(&t, s)| (t, s[(i, k)]))
                    .collect(),
                dashed: false,
            });
        }
    }
    for k in 0..p {
        state_series.push(Series {
            label: format!("xr[{}]", k + 1),
            points: times
                .iter()
                .zip(&record.reference)
                .map(|(&t, r)| (t, r[k]))
                .collect(),
            dashed: true,
        });
    }
    let states_plot = LinePlot {
        title: "Controlled states and reference".to_string(),
        x_label: "t (s)".to_string(),
        y_label: "state".to_string(),
        series: state_series,
    };

    let errors_plot = LinePlot {
        title: "Per-node tracking error".to_string(),
        x_label: "t (s)".to_string(),
        y_label: "log10 |e_i|".to_string(),
        series: (0..n)
            .map(|i| Series {
                label: format!("err[{}]", i + 1),
                points: times
                    .iter()
                    .zip(&record.error_norms)
                    .map(|(&t, e)| (t, e[i].max(LOG_FLOOR).log10()))
                    .collect(),
                dashed: false,
            })
            .collect(),
    };

    let mut input_series = Vec::new();
    for i in 0..n {
        for k in 0..p {
            input_series.push(Series {
                label: format!("u[{}][{}]", i + 1, k + 1),
                points: times
                    .iter()
                    .zip(&record.inputs)
                    .map(|(&t, u)| (t, u[(i, k)]))
                    .collect(),
                dashed: false,
            });
        }
    }
    let inputs_plot = LinePlot {
        title: "Control inputs".to_string(),
        x_label: "t (s)".to_string(),
        y_label: "u".to_string(),
        series: input_series,
    };

    let mut written = Vec::new();
    for (name, plot) in [
        ("states.svg", states_plot),
        ("errors.svg", errors_plot),
        ("inputs.svg", inputs_plot),
    ] {
        let path = dir.join(name);
        write_atomic(&path, &plot.render())?;
        written.push(path);
    }
    Ok(written)
}
