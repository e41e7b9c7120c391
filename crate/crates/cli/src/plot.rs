//! Standalone SVG scatter plot of `w_abs` against the energy gap.

use std::fmt::Write;

use edh_core::witness::{BinnedStats, WitnessRecord};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + v / self.x_max * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - v / self.y_max * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn upper(v: f64) -> f64 {
    if v > 0.0 {
        v * 1.05
    } else {
        1.0
    }
}

/// Scatter of every record with the binned medians drawn as a polyline.
pub fn scatter_svg(records: &[WitnessRecord], stats: &BinnedStats, title: &str) -> String {
    let frame = Frame {
        x_max: upper(records.iter().map(|r| r.gap).fold(0.0, f64::max)),
        y_max: upper(records.iter().map(|r| r.w_abs).fold(0.0, f64::max)),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    let (x0, y0) = (frame.x(0.0), frame.y(0.0));
    let (x1, y1) = (frame.x(frame.x_max), frame.y(frame.y_max));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    );
    for k in 0..=TICKS {
        let gx = frame.x_max * k as f64 / TICKS as f64;
        let gy = frame.y_max * k as f64 / TICKS as f64;
        let (px, py) = (frame.x(gx), frame.y(gy));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{gx:.2}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{gy:.3}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">|E_m - E_n|</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">|w_mn|</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    let _ = writeln!(s, r#"<g fill="steelblue" fill-opacity="0.5">"#);
    for r in records {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#,
            frame.x(r.gap),
            frame.y(r.w_abs)
        );
    }
    let _ = writeln!(s, "</g>");

    let points: Vec<String> = stats
        .bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| format!("{:.2},{:.2}", frame.x(b.center()), frame.y(b.median)))
        .collect();
    if !points.is_empty() {
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="crimson" stroke-width="2"/>"#,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use edh_core::witness::bin_stats;

    fn record(gap: f64, w_abs: f64) -> WitnessRecord {
        WitnessRecord {
            m: 0,
            n: 1,
            sector_m: 0,
            sector_n: 5,
            e_m: 0.0,
            e_n: gap,
            gap,
            w: w_abs,
            w_abs,
            operator_id: "W".into(),
            degenerate: false,
        }
    }

    #[test]
    fn one_marker_per_record_and_a_median_line() {
        let recs = vec![record(0.1, 0.2), record(1.3, 0.5), record(2.2, 0.05)];
        let stats = bin_stats(&recs, 0.5, true).unwrap();
        let svg = scatter_svg(&recs, &stats, "W <scan>");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("W &lt;scan&gt;"));
    }
}
