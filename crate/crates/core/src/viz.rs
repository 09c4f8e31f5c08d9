//! Error strip rendering.
//!
//! One horizontal strip per system under the ground truth strip. Red marks
//! time where the system shows the wrong line, black lines mark ground truth
//! line transitions and blue lines mark jumps.

use std::fmt::Write;

use crate::bscore::LineTimeline;
use crate::eval::accuracy_with_collar;

pub const GRAY: &str = "#c0c0c0";
pub const RED: &str = "#d62728";
pub const BLACK: &str = "#000000";
pub const BLUE: &str = "#1f77b4";

const LABEL_WIDTH: f64 = 140.0;
const PLOT_WIDTH: f64 = 900.0;
const STRIP_HEIGHT: f64 = 24.0;
const STRIP_GAP: f64 = 12.0;
const MARGIN: f64 = 10.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the ground truth strip followed by one strip per prediction, in
/// the order given.
pub fn render_strips(preds: &[(String, LineTimeline)], gt: &LineTimeline, jumps: &[f64]) -> String {
    let (t0, t1) = match (gt.start(), gt.end()) {
        (Some(a), Some(b)) => (a, b),
        _ => (0.0, 1.0),
    };
    let span = (t1 - t0).max(f64::MIN_POSITIVE);
    let x = |t: f64| LABEL_WIDTH + (t.clamp(t0, t1) - t0) / span * PLOT_WIDTH;

    let strips = preds.len() + 1;
    let width = LABEL_WIDTH + PLOT_WIDTH + MARGIN;
    let height = 2.0 * MARGIN + strips as f64 * STRIP_HEIGHT + (strips - 1) as f64 * STRIP_GAP;
    let transitions = gt.transitions();

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.2}" height="{:.2}" viewBox="0 0 {:.2} {:.2}">"#,
        width, height, width, height
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let rows = std::iter::once(("ground truth", None)).chain(preds.iter().map(|(n, p)| (n.as_str(), Some(p))));
    for (k, (name, pred)) in rows.enumerate() {
        let y = MARGIN + k as f64 * (STRIP_HEIGHT + STRIP_GAP);
        let _ = writeln!(svg, r#"<g class="strip" data-name="{}">"#, escape(name));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            LABEL_WIDTH - 8.0,
            y + STRIP_HEIGHT * 0.65,
            escape(name)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            LABEL_WIDTH, y, PLOT_WIDTH, STRIP_HEIGHT, GRAY
        );
        if let Some(pred) = pred {
            for (a, b) in error_spans(pred, gt) {
                let _ = writeln!(
                    svg,
                    r#"<rect class="error" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    x(a),
                    y,
                    x(b) - x(a),
                    STRIP_HEIGHT,
                    RED
                );
            }
        }
        for (times, color, class) in [(&transitions[..], BLACK, "transition"), (jumps, BLUE, "jump")] {
            for &t in times {
                let _ = writeln!(
                    svg,
                    r#"<line class="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1"/>"#,
                    class,
                    x(t),
                    y,
                    x(t),
                    y + STRIP_HEIGHT,
                    color
                );
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    svg
}

fn error_spans(pred: &LineTimeline, gt: &LineTimeline) -> Vec<(f64, f64)> {
    accuracy_with_collar(pred, gt, 0.0)
        .map(|r| r.error_intervals)
        .unwrap_or_default()
}
