//! Static SVG circle plots of configurations with `m = 2`.

use std::f64::consts::TAU;
use std::fmt::Write;

const PANEL: f64 = 260.0;
const RADIUS: f64 = 100.0;

/// One titled panel: a circle with a dot at each angle.
#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub angles: Vec<f64>,
}

/// Lays panels out in rows of `columns`. Output depends only on the input.
pub fn circle_svg(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let width = PANEL * columns as f64;
    let height = PANEL * rows as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (idx, panel) in panels.iter().enumerate() {
        let cx = PANEL * (idx % columns) as f64 + PANEL / 2.0;
        let cy = PANEL * (idx / columns) as f64 + PANEL / 2.0 + 10.0;
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            cy - RADIUS - 16.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            svg,
            r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{RADIUS:.1}" fill="none" stroke="blue" stroke-width="1.5"/>"#
        );
        for (k, a) in panel.angles.iter().enumerate() {
            let a = a.rem_euclid(TAU);
            // SVG y grows downwards.
            let (x, y) = (cx + RADIUS * a.cos(), cy - RADIUS * a.sin());
            let _ = writeln!(
                svg,
                r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="red"><title>{k}: {a:.6}</title></circle>"#
            );
        }
    }
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
    fn one_dot_per_angle() {
        let panels = vec![
            Panel { title: "M0 <r=3>".into(), angles: vec![0.0, 1.0, 2.0] },
            Panel { title: "M".into(), angles: vec![0.5] },
        ];
        let svg = circle_svg(&panels, 2);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("fill=\"red\"").count(), 4);
        assert_eq!(svg.matches("stroke=\"blue\"").count(), 2);
        assert!(svg.contains("M0 &lt;r=3&gt;"));
        assert_eq!(svg, circle_svg(&panels, 2));
    }
}
