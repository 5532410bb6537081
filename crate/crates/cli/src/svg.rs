//! Minimal SVG scatter plot: efficiency points against frontier polylines.
//! Quantitative analysis runs on the CSVs; this is a visual aid only.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Polylines (drawn first, behind the scatter).
    pub lines: Vec<Series<'a>>,
    /// Scatter series.
    pub scatter: Vec<Series<'a>>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

impl Plot<'_> {
    pub fn render(&self) -> String {
        let all = self
            .lines
            .iter()
            .chain(self.scatter.iter())
            .flat_map(|s| s.points.iter().copied());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for (x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x0 > x1 {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: &mut f64, hi: &mut f64| {
            let span = (*hi - *lo).max(1e-9);
            *lo -= 0.05 * span;
            *hi += 0.05 * span;
        };
        pad(&mut x0, &mut x1);
        pad(&mut y0, &mut y1);
        let sx = (W - 2.0 * MARGIN) / (x1 - x0);
        let sy = (H - 2.0 * MARGIN) / (y1 - y0);
        let px = |x: f64| MARGIN + (x - x0) * sx;
        let py = |y: f64| H - MARGIN - (y - y0) * sy;

        let mut s = String::new();
        let _ = write!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
             font-family=\"sans-serif\" font-size=\"12\">\n"
        );
        let _ = write!(
            s,
            "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" \
             fill=\"none\" stroke=\"#444\"/>\n",
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        let _ = write!(
            s,
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            self.title
        );
        let _ = write!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            H - 12.0,
            self.x_label
        );
        let _ = write!(
            s,
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 16 {})\">{}</text>\n",
            H / 2.0,
            H / 2.0,
            self.y_label
        );
        for line in &self.lines {
            let pts: Vec<String> = line
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = write!(
                s,
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                line.color,
                pts.join(" ")
            );
        }
        for series in &self.scatter {
            for &(x, y) in &series.points {
                let _ = write!(
                    s,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{}\" \
                     fill-opacity=\"0.7\"/>\n",
                    px(x),
                    py(y),
                    series.color
                );
            }
        }
        // legend in the top-left corner of the plot area
        let mut ly = MARGIN + 16.0;
        for series in self.lines.iter().chain(self.scatter.iter()) {
            let _ = write!(
                s,
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\
                 <text x=\"{}\" y=\"{}\">{}</text>\n",
                MARGIN + 10.0,
                ly - 4.0,
                series.color,
                MARGIN + 18.0,
                ly,
                series.label
            );
            ly += 16.0;
        }
        s.push_str("</svg>\n");
        s
    }
}
