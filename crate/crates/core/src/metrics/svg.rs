//! Self-contained SVG rendering of deletion curves. No styling or
//! script dependencies; the file opens in any browser or image viewer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::metrics::DeletionCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plots one or more labeled deletion curves (class probability against
/// fraction deleted, both on `[0, 1]`) into an SVG file.
pub fn write_deletion_svg(path: &Path, title: &str, curves: &[(String, DeletionCurve)]) -> Result<()> {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |fraction: f64| MARGIN_LEFT + fraction * plot_w;
    let y_of = |score: f64| MARGIN_TOP + (1.0 - score.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );

    // Gridlines and tick labels.
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let x = x_of(v);
        let y = y_of(v);
        let _ = write!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#ddd\"/>\n\
             <line x1=\"{}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{v}</text>\n\
             <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{v}</text>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w,
            MARGIN_TOP + plot_h + 20.0,
            MARGIN_LEFT - 8.0,
            y + 4.0,
        );
    }
    let _ = write!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">fraction deleted</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">class probability</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
    );

    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = format!("{:.2},{:.2}", x_of(0.0), y_of(curve.baseline_score));
        for (f, s) in curve.fractions.iter().zip(&curve.scores) {
            let _ = write!(points, " {:.2},{:.2}", x_of(*f), y_of(*s));
        }
        let _ = write!(
            svg,
            "<polyline points=\"{points}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n"
        );
        // Legend entry, stacked below the top-right corner.
        let ly = MARGIN_TOP + 16.0 + i as f64 * 18.0;
        let lx = MARGIN_LEFT + plot_w - 150.0;
        let _ = write!(
            svg,
            "<line x1=\"{lx:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            ly - 4.0,
            lx + 24.0,
            ly - 4.0,
            lx + 30.0,
            ly,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}
