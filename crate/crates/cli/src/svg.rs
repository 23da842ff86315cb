//! Minimal line plots written straight to SVG.

use std::fmt::Write;

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers instead of a line.
    pub markers: bool,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    /// Same scale on both axes.
    pub equal: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines.
    pub hlines: Vec<(f64, String)>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: &str, y_label: &str) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            equal: false,
            series: Vec::new(),
            hlines: Vec::new(),
        }
    }

    pub fn line(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
            markers: false,
        });
        self
    }

    pub fn dots(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
            markers: true,
        });
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let m = raw / mag;
    let k = if m < 1.5 {
        1.0
    } else if m < 3.5 {
        2.0
    } else if m < 7.5 {
        5.0
    } else {
        10.0
    };
    k * mag
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    ox: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.ox + MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        PANEL_H - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

fn bounds(p: &Panel) -> (f64, f64, f64, f64) {
    let tx = |x: f64| if p.log_x { x.log10() } else { x };
    let pts = p
        .series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| tx(*x).is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for (y, _) in &p.hlines {
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    let pad = |a: f64, b: f64| {
        let w = if b > a {
            0.05 * (b - a)
        } else {
            0.5 * a.abs().max(1.0)
        };
        (a - w, b + w)
    };
    let (x0, x1) = pad(x0, x1);
    let (mut y0, mut y1) = pad(y0, y1);
    if p.equal {
        // stretch y so both axes share a unit
        let sx = (x1 - x0) / (PANEL_W - MARGIN_L - MARGIN_R);
        let sy = (y1 - y0) / (PANEL_H - MARGIN_T - MARGIN_B);
        if sx > sy {
            let mid = 0.5 * (y0 + y1);
            let half = 0.5 * sx * (PANEL_H - MARGIN_T - MARGIN_B);
            (y0, y1) = (mid - half, mid + half);
        }
    }
    (x0, x1, y0, y1)
}

fn draw(out: &mut String, p: &Panel, ox: f64) {
    let (x0, x1, y0, y1) = bounds(p);
    let f = Frame { x0, x1, y0, y1, ox };
    let (l, r) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
    let (t, b) = (MARGIN_T, PANEL_H - MARGIN_B);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="13">{}</text>"#,
        ox + PANEL_W / 2.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        (l + r) / 2.0,
        PANEL_H - 12.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 {} {})">{}</text>"#,
        ox + 16.0,
        (t + b) / 2.0,
        ox + 16.0,
        (t + b) / 2.0,
        escape(&p.y_label)
    );
    let xs = nice_step(x1 - x0);
    let mut v = (x0 / xs).ceil() * xs;
    while v <= x1 {
        let x = f.px(v);
        let text = if p.log_x {
            format!("1e{}", label(v))
        } else {
            label(v)
        };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            b + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-size="10">{text}</text>"#,
            b + 17.0
        );
        v += xs;
    }
    let ys = nice_step(y1 - y0);
    let mut v = (y0 / ys).ceil() * ys;
    while v <= y1 {
        let y = f.py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/>"#,
            l - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            l - 7.0,
            y + 3.0,
            label(v)
        );
        v += ys;
    }
    for (y, name) in &p.hlines {
        let py = f.py(*y);
        let _ = writeln!(
            out,
            r##"<line x1="{l}" y1="{py:.2}" x2="{r}" y2="{py:.2}" stroke="#777" stroke-dasharray="5,4"/>"##
        );
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{:.2}" text-anchor="end" font-size="10" fill="#555">{}</text>"##,
            r - 4.0,
            py - 4.0,
            escape(name)
        );
    }
    for (k, s) in p.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|&(x, y)| (if p.log_x { x.log10() } else { x }, y))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| (f.px(x), f.py(y)))
            .collect();
        if s.markers {
            for (x, y) in &pts {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                );
            }
        } else if !pts.is_empty() {
            let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                d.join(" ")
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{}</text>"#,
            l + 6.0,
            t + 14.0 + 13.0 * k as f64,
            escape(&s.label)
        );
    }
}

/// Panels side by side.
pub fn render(panels: &[Panel]) -> String {
    let w = PANEL_W * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{PANEL_H}" viewBox="0 0 {w} {PANEL_H}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw(&mut out, p, PANEL_W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_escaped_titles() {
        let p = Panel::new("a < b", "t", "r").line("r(t)", vec![(0.0, 1.0), (1.0, 2.0)]);
        let s = render(&[p]);
        assert!(s.starts_with("<svg"));
        assert!(s.contains("a &lt; b"));
        assert!(s.contains("<polyline"));
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(nice_step(0.5), 0.1);
    }
}
