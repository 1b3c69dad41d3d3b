//! Minimal static SVG charts: line plots with error bands, and grouped bars.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 52.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Half-width of the band drawn around each point.
    pub band: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical reference lines.
    pub markers: Vec<f64>,
    pub y_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub groups: Vec<String>,
    /// `(label, one value per group)`.
    pub bars: Vec<(String, Vec<f64>)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * h
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        let pad = if lo.abs() > 1e-9 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn tick_values(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + step * 1e-9 {
        out.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - MARGIN_RIGHT + MARGIN_LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, x_ticks: Option<&[f64]>, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for t in tick_values(frame.y.0, frame.y.1) {
        let y = frame.py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#e0e0e0"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    if let Some(ticks) = x_ticks {
        for &t in ticks {
            let x = frame.px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 18.0,
                tick_label(t)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, labels: &[&str]) {
    let x = WIDTH - MARGIN_RIGHT + 14.0;
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="14" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 9.0,
            PALETTE[i % PALETTE.len()],
            x + 20.0,
            y,
            escape(label)
        );
    }
}

impl LinePlot {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let y_range = self.y_range.unwrap_or_else(|| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in &self.series {
                for (i, &(_, y)) in s.points.iter().enumerate() {
                    let half = s.band.as_ref().map_or(0.0, |b| b[i]);
                    lo = lo.min(y - half);
                    hi = hi.max(y + half);
                }
            }
            padded(lo, hi)
        });
        let x_range = if xmax > xmin { (xmin, xmax) } else { padded(xmin, xmax) };
        let frame = Frame { x: x_range, y: y_range };

        let mut out = String::new();
        header(&mut out, &self.title);
        axes(
            &mut out,
            &frame,
            Some(&tick_values(frame.x.0, frame.x.1)),
            &self.x_label,
            &self.y_label,
        );
        for &m in &self.markers {
            if m >= frame.x.0 && m <= frame.x.1 {
                let x = frame.px(m);
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#888888" stroke-dasharray="4 3"/>"##,
                    frame.py(frame.y.0),
                    frame.py(frame.y.1)
                );
            }
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if let Some(band) = &s.band {
                let upper = s.points.iter().zip(band).map(|(&(x, y), h)| (x, y + h));
                let lower = s.points.iter().zip(band).rev().map(|(&(x, y), h)| (x, y - h));
                let pts: Vec<String> = upper
                    .chain(lower)
                    .map(|(x, y)| format!("{:.1},{:.1}", frame.px(x), frame.py(y)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    pts.join(" ")
                );
            }
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.1},{:.1}", frame.px(x), frame.py(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        let labels: Vec<&str> = self.series.iter().map(|s| s.label.as_str()).collect();
        legend(&mut out, &labels);
        out.push_str("</svg>\n");
        out
    }
}

impl BarChart {
    pub fn render(&self) -> String {
        let hi = self
            .bars
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .fold(0.0f64, f64::max);
        let frame = Frame {
            x: (0.0, self.groups.len() as f64),
            y: (0.0, if hi > 0.0 { hi * 1.1 } else { 1.0 }),
        };
        let mut out = String::new();
        header(&mut out, &self.title);
        axes(&mut out, &frame, None, "", &self.y_label);
        let n = self.bars.len().max(1) as f64;
        let slot = 0.8 / n;
        for (g, group) in self.groups.iter().enumerate() {
            for (b, (_, values)) in self.bars.iter().enumerate() {
                let v = values.get(g).copied().unwrap_or(0.0);
                let x0 = frame.px(g as f64 + 0.1 + slot * b as f64);
                let x1 = frame.px(g as f64 + 0.1 + slot * (b as f64 + 1.0));
                let (y0, y1) = (frame.py(0.0), frame.py(v.max(0.0)));
                let _ = writeln!(
                    out,
                    r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                    (x1 - x0 - 2.0).max(1.0),
                    y0 - y1,
                    PALETTE[b % PALETTE.len()]
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                frame.px(g as f64 + 0.5),
                frame.py(0.0) + 18.0,
                escape(group)
            );
        }
        let labels: Vec<&str> = self.bars.iter().map(|(l, _)| l.as_str()).collect();
        legend(&mut out, &labels);
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let plot = LinePlot {
            title: "w <a & b>".into(),
            x_label: "trial".into(),
            y_label: "weight".into(),
            series: vec![Series {
                label: "w0".into(),
                points: vec![(0.0, 0.2), (1.0, 0.5), (2.0, 0.9)],
                band: Some(vec![0.05, 0.05, 0.05]),
            }],
            markers: vec![1.0],
            y_range: Some((0.0, 1.0)),
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("w &lt;a &amp; b&gt;"));
        assert!(svg.contains("<polygon"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let plot = LinePlot {
            title: "flat".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "g".into(),
                points: vec![(-1.0, 5.0), (1.0, 5.0)],
                band: None,
            }],
            markers: vec![],
            y_range: None,
        };
        assert!(!plot.render().contains("NaN"));
    }

    #[test]
    fn bars_render_every_group() {
        let chart = BarChart {
            title: "hint rate".into(),
            y_label: "rate".into(),
            groups: vec!["volatile".into(), "stable".into()],
            bars: vec![("M1".into(), vec![0.2, 0.1]), ("M3".into(), vec![0.5, 0.2])],
        };
        let svg = chart.render();
        assert_eq!(svg.matches("<rect x=").count(), 1 + 4 + 2);
        assert!(svg.contains(">volatile<") && svg.contains(">stable<"));
    }

    #[test]
    fn ticks_cover_range() {
        let t = tick_values(0.0, 1.0);
        assert_eq!(t.first(), Some(&0.0));
        assert!((t.last().unwrap() - 1.0).abs() < 1e-9);
    }
}
