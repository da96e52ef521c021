//! Minimal SVG writer for the static figures.

use std::fmt::Write;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

/// Coordinates are rounded to this many decimals so output is stable.
fn n(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" style="{style}"/>"#,
            n(x),
            n(y),
            n(w),
            n(h)
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" style="{style}"/>"#,
            n(cx),
            n(cy),
            n(r)
        );
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), style: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" style="{style}"/>"#,
            n(a.0),
            n(a.1),
            n(b.0),
            n(b.1)
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        let coords: Vec<String> = pts.iter().map(|p| format!("{},{}", n(p.0), n(p.1))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" style="fill:none;{style}"/>"#,
            coords.join(" ")
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="{}">{}</text>"#,
            n(x),
            n(y),
            n(size),
            escape(text)
        );
    }

    pub fn finish(self) -> String {
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
                "\n",
                r#"<rect width="100%" height="100%" fill="white"/>"#,
                "\n{body}</svg>\n"
            ),
            w = n(self.width),
            h = n(self.height),
            body = self.body
        )
    }
}

/// Stroke colour per finger, thumb first.
pub const FINGER_COLOURS: [&str; 5] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_shape() {
        let mut s = Svg::new(10.0, 20.0);
        s.circle(1.0, -0.0001, 0.5, "fill:red");
        s.text(0.0, 0.0, 3.0, "a<b");
        let out = s.finish();
        assert!(out.starts_with("<svg "));
        assert!(out.ends_with("</svg>\n"));
        assert!(out.contains(r#"cy="0.00""#));
        assert!(out.contains("a&lt;b"));
    }
}
