//! Minimal SVG line chart.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

/// One polyline of `(t, value)` points with the marked locations drawn as
/// vertical dashed lines.
pub fn line_chart(title: &str, t_lo: usize, values: &[f64], marks: &[usize]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    let (x0, x1) = (MARGIN, WIDTH - MARGIN / 2.0);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    if values.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let t_hi = t_lo + values.len() - 1;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let tx = |t: usize| {
        if t_hi == t_lo {
            (x0 + x1) / 2.0
        } else {
            x0 + (t - t_lo) as f64 / (t_hi - t_lo) as f64 * (x1 - x0)
        }
    };
    let vy = |v: f64| y0 - (v - lo) / span * (y0 - y1);

    for &m in marks.iter().filter(|&&m| m >= t_lo && m <= t_hi) {
        let x = tx(m);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{y0}" stroke="firebrick" stroke-dasharray="4 3"/>"#
        );
    }
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(j, &v)| format!("{:.2},{:.2}", tx(t_lo + j), vy(v)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.2" points="{}"/>"#,
        points.join(" ")
    );

    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(&mut svg, x0, y0 + 16.0, "start", t_lo.to_string());
    label(&mut svg, x1, y0 + 16.0, "end", t_hi.to_string());
    label(&mut svg, x0 - 4.0, y0, "end", format!("{lo:.3}"));
    label(&mut svg, x0 - 4.0, y1 + 10.0, "end", format!("{hi:.3}"));
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_vertex_per_value() {
        let svg = line_chart("trace", 5, &[1.0, 3.0, 2.0], &[6]);
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), 3);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn flat_and_empty_traces_render() {
        assert!(line_chart("flat", 1, &[2.0; 4], &[]).contains("polyline"));
        assert!(!line_chart("none", 1, &[], &[]).contains("polyline"));
    }
}
