//! Static SVG line charts for the two report figures. No display server or
//! external renderer: the figures are plain `<svg>` text with polylines,
//! axes, ticks and a legend.

use crate::artifacts::RunRow;
use resmpc_core::experiment::PredictionTable;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PANEL_WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 42.0;

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.01..10_000.0).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn data_bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !xmin.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        ymax = ymin + 1.0;
        ymin -= 1.0;
    }
    let pad = 0.05 * (ymax - ymin);
    ((xmin, xmax), (ymin - pad, ymax + pad))
}

fn render_panel(panel: &Panel, y_offset: f64, out: &mut String) {
    let ((xmin, xmax), (ymin, ymax)) = data_bounds(&panel.series);
    let plot_w = PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| y_offset + MARGIN_TOP + plot_h - (y - ymin) / (ymax - ymin) * plot_h;

    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"15\" font-weight=\"bold\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        y_offset + 18.0,
        panel.title
    ));
    // frame
    out.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT:.1}\" y=\"{:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        y_offset + MARGIN_TOP
    ));
    // ticks and grid
    for i in 0..=4 {
        let fx = xmin + (xmax - xmin) * i as f64 / 4.0;
        let px = sx(fx);
        out.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n",
            y_offset + MARGIN_TOP,
            y_offset + MARGIN_TOP + plot_h
        ));
        out.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            y_offset + MARGIN_TOP + plot_h + 16.0,
            fmt_tick(fx)
        ));
        let fy = ymin + (ymax - ymin) * i as f64 / 4.0;
        let py = sy(fy);
        out.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n",
            MARGIN_LEFT + plot_w
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            py + 4.0,
            fmt_tick(fy)
        ));
    }
    // axis labels
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        y_offset + PANEL_HEIGHT - 8.0,
        panel.x_label
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>\n",
        y_offset + MARGIN_TOP + plot_h / 2.0,
        y_offset + MARGIN_TOP + plot_h / 2.0,
        panel.y_label
    ));
    // series
    for s in &panel.series {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed {
            " stroke-dasharray=\"6,4\""
        } else {
            ""
        };
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash} points=\"{}\"/>\n",
            s.color,
            pts.join(" ")
        ));
    }
    // legend, top-right inside the frame
    let mut lx = MARGIN_LEFT + plot_w - 10.0;
    for s in panel.series.iter().rev() {
        let text_w = 7.0 * s.label.len() as f64;
        lx -= text_w;
        out.push_str(&format!(
            "<text x=\"{lx:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>\n",
            y_offset + MARGIN_TOP + 16.0,
            s.label
        ));
        lx -= 26.0;
        let dash = if s.dashed {
            " stroke-dasharray=\"6,4\""
        } else {
            ""
        };
        out.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{}\" stroke-width=\"2\"{dash}/>\n",
            y_offset + MARGIN_TOP + 12.0,
            lx + 20.0,
            y_offset + MARGIN_TOP + 12.0,
            s.color
        ));
        lx -= 14.0;
    }
}

pub fn render_figure(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {PANEL_WIDTH:.0} {height:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, panel) in panels.iter().enumerate() {
        render_panel(panel, PANEL_HEIGHT * i as f64, &mut out);
    }
    out.push_str("</svg>\n");
    out
}

/// Position and velocity of the nominal-MPC run versus the compensated run
/// versus the reference, over time.
pub fn fig4(nominal: &[RunRow], compensated: &[RunRow], reference: &[f64]) -> String {
    let t_last = nominal.last().map(|r| r.t).unwrap_or(1.0);
    let panel = |title: &str, pick: fn(&RunRow) -> f64, target: f64| Panel {
        title: title.to_string(),
        x_label: "time [s]".to_string(),
        y_label: title.to_string(),
        series: vec![
            Series {
                label: "nominal MPC".to_string(),
                color: "#1f77b4",
                dashed: false,
                points: nominal.iter().map(|r| (r.t, pick(r))).collect(),
            },
            Series {
                label: "compensated MPC".to_string(),
                color: "#d62728",
                dashed: false,
                points: compensated.iter().map(|r| (r.t, pick(r))).collect(),
            },
            Series {
                label: "target".to_string(),
                color: "#7f7f7f",
                dashed: true,
                points: vec![(0.0, target), (t_last, target)],
            },
        ],
    };
    render_figure(&[
        panel("position [m]", |r| r.s_true, reference[0]),
        panel("velocity [m/s]", |r| r.v_true, reference[1]),
    ])
}

/// Measured versus predicted residuals for both dimensions over the
/// held-out window.
pub fn fig5(table: &PredictionTable) -> String {
    let panel = |title: &str, dim: usize| Panel {
        title: title.to_string(),
        x_label: "step k".to_string(),
        y_label: "residual".to_string(),
        series: vec![
            Series {
                label: "measured".to_string(),
                color: "#1f77b4",
                dashed: false,
                points: table
                    .rows
                    .iter()
                    .map(|r| (r.k as f64, r.mu_true[dim]))
                    .collect(),
            },
            Series {
                label: "predicted".to_string(),
                color: "#d62728",
                dashed: true,
                points: table
                    .rows
                    .iter()
                    .map(|r| (r.k as f64, r.mu_pred[dim]))
                    .collect(),
            },
        ],
    };
    render_figure(&[
        panel("residual: position component", 0),
        panel("residual: velocity component", 1),
    ])
}
