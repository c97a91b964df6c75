//! Minimal static line plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

pub struct Segment {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub color: &'static str,
    pub stroke: f64,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub segments: Vec<Segment>,
    /// Horizontal reference lines `(y, color, dashed)`.
    pub guides: Vec<(f64, &'static str, bool)>,
}

impl Plot {
    pub fn new(
        title: &str,
        x_label: &str,
        y_label: &str,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range,
            y_range,
            segments: Vec::new(),
            guides: Vec::new(),
        }
    }

    /// Adds a polyline, one segment per consecutive pair of points.
    pub fn polyline(&mut self, points: &[(f64, f64)], color: &'static str, stroke: f64) {
        for p in points.windows(2) {
            self.segments.push(Segment {
                from: p[0],
                to: p[1],
                color,
                stroke,
            });
        }
    }

    fn sx(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        MARGIN + (x - a) / (b - a) * (WIDTH - 2.0 * MARGIN)
    }

    fn sy(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        HEIGHT - MARGIN - (y - a) / (b - a) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn render(&self, timestamp: Option<u64>) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        if let Some(ts) = timestamp {
            let _ = writeln!(s, "<!-- generated at unix time {ts} -->");
        }
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (x0, x1) = (self.sx(self.x_range.0), self.sx(self.x_range.1));
        let (y0, y1) = (self.sy(self.y_range.0), self.sy(self.y_range.1));
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for &(y, color, dashed) in &self.guides {
            let dash = if dashed {
                r#" stroke-dasharray="4 3""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<line x1="{x0:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="{color}"{dash}/>"#,
                self.sy(y),
                self.sy(y)
            );
        }
        for seg in &self.segments {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="{}"/>"#,
                self.sx(seg.from.0),
                self.sy(seg.from.1),
                self.sx(seg.to.0),
                self.sy(seg.to.1),
                seg.color,
                seg.stroke
            );
        }
        for (i, frac) in [0.0, 0.5, 1.0].iter().enumerate() {
            let x = self.x_range.0 + frac * (self.x_range.1 - self.x_range.0);
            let y = self.y_range.0 + frac * (self.y_range.1 - self.y_range.0);
            let anchor = ["start", "middle", "end"][i];
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="{anchor}">{x:.3}</text>"#,
                self.sx(x),
                y0 + 14.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{y:.3}</text>"#,
                x0 - 4.0,
                self.sy(y) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        s.push_str("</svg>\n");
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
