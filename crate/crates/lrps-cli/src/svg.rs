//! Minimal log-log SVG plotting: axes, power ticks, polylines, markers and
//! a legend. No plotting dependency, so figures are byte-reproducible.

use std::fmt::Write;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Clone, Copy)]
pub enum Marker {
    Square,
    Circle,
    Diamond,
    Triangle,
    Cross,
}

pub const MARKERS: [Marker; 5] = [
    Marker::Square,
    Marker::Circle,
    Marker::Diamond,
    Marker::Triangle,
    Marker::Cross,
];

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 26.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 64.0;

/// A log-log plot under construction. Ranges are in data units; both axes
/// are drawn on logarithmic scales with ticks at powers of the given base.
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    x_tick_base: f64,
    y_tick_base: f64,
    elements: String,
    legend: Vec<(String, &'static str, Marker)>,
}

impl Plot {
    pub fn new(
        title: &str,
        x_label: &str,
        y_label: &str,
        x_range: (f64, f64),
        y_range: (f64, f64),
        x_tick_base: f64,
        y_tick_base: f64,
    ) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            x_range: pad_range(x_range),
            y_range: pad_range(y_range),
            x_tick_base,
            y_tick_base,
            elements: String::new(),
            legend: Vec::new(),
        }
    }

    fn x_px(&self, v: f64) -> f64 {
        let (lo, hi) = self.x_range;
        let frac = (v.ln() - lo.ln()) / (hi.ln() - lo.ln());
        MARGIN_LEFT + frac * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y_px(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        let frac = (v.ln() - lo.ln()) / (hi.ln() - lo.ln());
        HEIGHT - MARGIN_BOTTOM - frac * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str, dashed: bool) {
        if points.len() < 2 {
            return;
        }
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", self.x_px(x), self.y_px(y)))
            .collect();
        let dash = if dashed {
            " stroke-dasharray=\"6,5\""
        } else {
            ""
        };
        let _ = writeln!(
            self.elements,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>",
            path.join(" ")
        );
    }

    pub fn marker(&mut self, marker: Marker, x: f64, y: f64, color: &str, class: &str) {
        let (cx, cy) = (self.x_px(x), self.y_px(y));
        let s = 4.5;
        let e = &mut self.elements;
        let _ = match marker {
            Marker::Square => writeln!(
                e,
                "<rect class=\"{class}\" x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{color}\"/>",
                cx - s, cy - s, 2.0 * s, 2.0 * s
            ),
            Marker::Circle => writeln!(
                e,
                "<circle class=\"{class}\" cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{s:.1}\" fill=\"{color}\"/>"
            ),
            Marker::Diamond => writeln!(
                e,
                "<polygon class=\"{class}\" points=\"{:.1},{cy:.1} {cx:.1},{:.1} {:.1},{cy:.1} {cx:.1},{:.1}\" fill=\"{color}\"/>",
                cx - s - 1.0, cy - s - 1.0, cx + s + 1.0, cy + s + 1.0
            ),
            Marker::Triangle => writeln!(
                e,
                "<polygon class=\"{class}\" points=\"{cx:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"{color}\"/>",
                cy - s - 1.0, cx - s, cy + s, cx + s, cy + s
            ),
            Marker::Cross => writeln!(
                e,
                "<path class=\"{class}\" d=\"M{:.1} {:.1} L{:.1} {:.1} M{:.1} {:.1} L{:.1} {:.1}\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
                cx - s, cy - s, cx + s, cy + s, cx - s, cy + s, cx + s, cy - s
            ),
        };
    }

    pub fn legend_entry(&mut self, label: &str, color: &'static str, marker: Marker) {
        self.legend.push((label.to_string(), color, marker));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(
            out,
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            out,
            "<style>text{{font-family:sans-serif;fill:#222}}.tick{{font-size:11px}}.label{{font-size:13px}}.title{{font-size:15px;font-weight:bold}}</style>"
        );

        // frame
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        let _ = writeln!(
            out,
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>",
            x1 - x0,
            y0 - y1
        );

        for v in tick_values(self.x_range, self.x_tick_base) {
            let px = self.x_px(v);
            let _ = writeln!(
                out,
                "<line x1=\"{px:.1}\" y1=\"{y1:.1}\" x2=\"{px:.1}\" y2=\"{y0:.1}\" stroke=\"#ddd\"/>\
                 <line x1=\"{px:.1}\" y1=\"{y0:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#444\"/>\
                 <text class=\"tick\" x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                y0 + 5.0,
                y0 + 18.0,
                tick_label(v)
            );
        }
        for v in tick_values(self.y_range, self.y_tick_base) {
            let py = self.y_px(v);
            let _ = writeln!(
                out,
                "<line x1=\"{x0:.1}\" y1=\"{py:.1}\" x2=\"{x1:.1}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\
                 <line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{x0:.1}\" y2=\"{py:.1}\" stroke=\"#444\"/>\
                 <text class=\"tick\" x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                tick_label(v)
            );
        }

        let _ = writeln!(
            out,
            "<text class=\"title\" x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            (x0 + x1) / 2.0,
            MARGIN_TOP - 16.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            "<text class=\"label\" x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            (x0 + x1) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text class=\"label\" x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">{}</text>",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );

        out.push_str(&self.elements);

        if !self.legend.is_empty() {
            let lx = x1 - 170.0;
            let mut ly = y1 + 14.0;
            let _ = writeln!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"162\" height=\"{:.1}\" fill=\"white\" fill-opacity=\"0.85\" stroke=\"#999\"/>",
                lx - 6.0,
                ly - 12.0,
                self.legend.len() as f64 * 16.0 + 8.0
            );
            let legend = self.legend.clone();
            for (label, color, marker) in legend {
                let _ = writeln!(
                    out,
                    "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"1.6\"/>",
                    lx + 18.0
                );
                self.render_legend_marker(&mut out, marker, lx + 9.0, ly, color);
                let _ = writeln!(
                    out,
                    "<text class=\"tick\" x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                    lx + 24.0,
                    ly + 4.0,
                    escape(&label)
                );
                ly += 16.0;
            }
        }

        out.push_str("</svg>\n");
        out
    }

    fn render_legend_marker(
        &self,
        out: &mut String,
        marker: Marker,
        cx: f64,
        cy: f64,
        color: &str,
    ) {
        let s = 3.5;
        let _ = match marker {
            Marker::Square => writeln!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{color}\"/>",
                cx - s, cy - s, 2.0 * s, 2.0 * s
            ),
            Marker::Circle => writeln!(
                out,
                "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{s:.1}\" fill=\"{color}\"/>"
            ),
            Marker::Diamond => writeln!(
                out,
                "<polygon points=\"{:.1},{cy:.1} {cx:.1},{:.1} {:.1},{cy:.1} {cx:.1},{:.1}\" fill=\"{color}\"/>",
                cx - s - 1.0, cy - s - 1.0, cx + s + 1.0, cy + s + 1.0
            ),
            Marker::Triangle => writeln!(
                out,
                "<polygon points=\"{cx:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"{color}\"/>",
                cy - s - 1.0, cx - s, cy + s, cx + s, cy + s
            ),
            Marker::Cross => writeln!(
                out,
                "<path d=\"M{:.1} {:.1} L{:.1} {:.1} M{:.1} {:.1} L{:.1} {:.1}\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
                cx - s, cy - s, cx + s, cy + s, cx - s, cy + s, cx + s, cy - s
            ),
        };
    }
}

fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    assert!(lo > 0.0 && hi > 0.0, "log axes need positive ranges");
    if lo == hi {
        (lo / 2.0, hi * 2.0)
    } else {
        (lo / 1.3, hi * 1.3)
    }
}

fn tick_values((lo, hi): (f64, f64), base: f64) -> Vec<f64> {
    let first = (lo.ln() / base.ln()).ceil() as i32;
    let last = (hi.ln() / base.ln()).floor() as i32;
    (first..=last).map(|e| base.powi(e)).collect()
}

fn tick_label(v: f64) -> String {
    if v >= 1.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.0e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
