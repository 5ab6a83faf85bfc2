//! Deterministic SVG output for curve overlays and elbow plots.

use std::fmt::Write;

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 320.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// One variable's curves on a common grid.
#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub grid: Vec<f64>,
    /// Drawn thin and grey.
    pub data: Vec<Vec<f64>>,
    /// Drawn solid and coloured.
    pub archetypes: Vec<Vec<f64>>,
    /// Drawn dashed and coloured.
    pub archetypoids: Vec<Vec<f64>>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    top: f64,
}

impl Frame {
    fn new(xs: &[f64], ys: impl Iterator<Item = f64>, left: f64, top: f64) -> Self {
        let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let mut x0 = xs.first().copied().unwrap_or(0.0);
        let mut x1 = xs.last().copied().unwrap_or(1.0);
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        Frame { x0, x1, y0, y1, left, top }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + MARGIN + (x - self.x0) / (self.x1 - self.x0) * (PANEL_W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.top + PANEL_H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (PANEL_H - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String) {
        let (l, r) = (self.left + MARGIN, self.left + PANEL_W - MARGIN);
        let (t, b) = (self.top + MARGIN, self.top + PANEL_H - MARGIN);
        let _ = writeln!(out, r##"<line x1="{l:.2}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}" stroke="#000"/>"##);
        let _ = writeln!(out, r##"<line x1="{l:.2}" y1="{t:.2}" x2="{l:.2}" y2="{b:.2}" stroke="#000"/>"##);
        let _ = writeln!(
            out,
            r#"<text x="{l:.2}" y="{:.2}" font-size="10">{}</text><text x="{r:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            b + 14.0,
            fmt_tick(self.x0),
            b + 14.0,
            fmt_tick(self.x1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{b:.2}" font-size="10" text-anchor="end">{}</text><text x="{:.2}" y="{t:.2}" font-size="10" text-anchor="end">{}</text>"#,
            l - 4.0,
            fmt_tick(self.y0),
            l - 4.0,
            fmt_tick(self.y1)
        );
    }

    fn path_data(&self, xs: &[f64], ys: &[f64]) -> String {
        let mut d = String::new();
        for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, self.px(*x), self.py(*y));
        }
        d
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
}

/// Side-by-side panels, one per variable.
pub fn curves_svg(panels: &[Panel]) -> String {
    let mut out = String::new();
    header(&mut out, PANEL_W * panels.len().max(1) as f64, PANEL_H);
    for (p, panel) in panels.iter().enumerate() {
        let ys = panel.data.iter().chain(&panel.archetypes).chain(&panel.archetypoids).flatten().copied();
        let frame = Frame::new(&panel.grid, ys, p as f64 * PANEL_W, 0.0);
        frame.axes(&mut out);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            frame.left + PANEL_W / 2.0,
            MARGIN / 2.0,
            escape(&panel.title)
        );
        for y in &panel.data {
            let _ = writeln!(
                out,
                r##"<path class="data" d="{}" fill="none" stroke="#b0b0b0" stroke-width="0.8"/>"##,
                frame.path_data(&panel.grid, y)
            );
        }
        for (j, y) in panel.archetypes.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<path class="archetype" d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                frame.path_data(&panel.grid, y),
                PALETTE[j % PALETTE.len()]
            );
        }
        for (j, y) in panel.archetypoids.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<path class="archetypoid" d="{}" fill="none" stroke="{}" stroke-width="2" stroke-dasharray="6 4"/>"#,
                frame.path_data(&panel.grid, y),
                PALETTE[j % PALETTE.len()]
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// RSS against k as a single polyline with a marker per point.
pub fn elbow_svg(points: &[(usize, f64)]) -> String {
    let mut out = String::new();
    header(&mut out, PANEL_W, PANEL_H);
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let frame = Frame::new(&xs, points.iter().map(|p| p.1).chain(std::iter::once(0.0)), 0.0, 0.0);
    frame.axes(&mut out);
    let coords: Vec<String> =
        points.iter().map(|&(k, r)| format!("{:.2},{:.2}", frame.px(k as f64), frame.py(r))).collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        coords.join(" ")
    );
    for &(k, r) in points {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##,
            frame.px(k as f64),
            frame.py(r)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">RSS by k</text>"#,
        PANEL_W / 2.0,
        MARGIN / 2.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_curve_one_path() {
        let p = Panel { title: "x".into(), grid: vec![0.0, 1.0, 2.0], data: vec![vec![1.0, 2.0, 0.5]], ..Default::default() };
        let svg = curves_svg(&[p]);
        assert_eq!(svg.matches("<path").count(), 1);
    }

    #[test]
    fn flat_input_renders() {
        let p = Panel { title: "a<b".into(), grid: vec![3.0], data: vec![vec![1.0]], ..Default::default() };
        let svg = curves_svg(&[p]);
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn elbow_has_one_polyline() {
        let svg = elbow_svg(&[(1, 5.0), (2, 2.0), (3, 0.1)]);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
