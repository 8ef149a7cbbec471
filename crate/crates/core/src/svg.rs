//! Static SVG charts: anytime curves, EAF difference panels and interval
//! plots. Output depends only on the inputs, never on the environment.

use std::fmt::Write as _;

use crate::metrics::EafGrid;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Largest number of heat-map cells drawn per axis.
pub const MAX_PLOT_CELLS: usize = 120;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

/// Linear map from data to pixels.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, from, to }
    }

    fn at(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn frame(out: &mut String, x: Axis, y: Axis, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (x.from, x.to, y.from, y.to);
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        x1 - x0,
        y0 - y1
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = x.lo + t * (x.hi - x.lo);
        let yv = y.lo + t * (y.hi - y.lo);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x.at(xv),
            y0 + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y.at(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        y0 + 36.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Mean and standard deviation of one variant over time.
#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeBand {
    pub label: String,
    /// `(evals, mean, sd)` sorted by evaluations.
    pub points: Vec<(f64, f64, f64)>,
}

/// Mean HV against evaluations with a shaded one-sd band per variant. The
/// horizontal axis always spans `[0, budget]`.
pub fn anytime_svg(title: &str, budget: usize, series: &[AnytimeBand]) -> String {
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    let x = Axis::new(0.0, budget as f64, MARGIN, WIDTH - MARGIN);
    let y = Axis::new(0.0, 1.0, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<text x="{:.2}" y="24" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    frame(&mut out, x, y, "evaluations", "hypervolume");
    for (k, band) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper: Vec<String> = band
            .points
            .iter()
            .map(|&(e, m, s)| format!("{:.2},{:.2}", x.at(e), y.at((m + s).min(1.0))))
            .collect();
        let lower: Vec<String> = band
            .points
            .iter()
            .rev()
            .map(|&(e, m, s)| format!("{:.2},{:.2}", x.at(e), y.at((m - s).max(0.0))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon class="band" points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = band
            .points
            .iter()
            .map(|&(e, m, _)| format!("{:.2},{:.2}", x.at(e), y.at(m)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(&band.label),
            line.join(" ")
        );
        let ly = MARGIN + 8.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - MARGIN - 110.0,
            WIDTH - MARGIN - 90.0,
            WIDTH - MARGIN - 84.0,
            ly + 4.0,
            escape(&band.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn display_indices(len: usize) -> Vec<usize> {
    if len <= MAX_PLOT_CELLS + 1 {
        return (0..len).collect();
    }
    let last = len - 1;
    let mut idx: Vec<usize> = (0..=MAX_PLOT_CELLS).map(|i| i * last / MAX_PLOT_CELLS).collect();
    idx.dedup();
    idx
}

fn staircase(points: &[(f64, f64)], x: Axis, y: Axis) -> String {
    let mut path = Vec::new();
    for (k, &(px, py)) in points.iter().enumerate() {
        path.push(format!("{:.2},{:.2}", x.at(px), y.at(py)));
        if let Some(&(nx, _)) = points.get(k + 1) {
            path.push(format!("{:.2},{:.2}", x.at(nx), y.at(py)));
        }
    }
    path.join(" ")
}

/// One heat panel showing where `sign * diff` is positive.
fn eaf_panel(diff: &EafGrid, sign: f64, best: &[(f64, f64)], worst: &[(f64, f64)], size: f64) -> String {
    let mut out = String::new();
    let xs = &diff.x_breaks;
    let ys = &diff.y_breaks;
    let x = Axis::new(xs[0], xs[xs.len() - 1], 0.0, size);
    let y = Axis::new(ys[0], ys[ys.len() - 1], size, 0.0);
    let _ = writeln!(out, r##"<rect width="{size}" height="{size}" fill="none" stroke="#333"/>"##);
    let ix = display_indices(xs.len());
    let iy = display_indices(ys.len());
    for w in ix.windows(2) {
        for v in iy.windows(2) {
            let level = sign * diff.level(w[0], v[0]);
            if level <= 0.0 {
                continue;
            }
            let (px, py) = (x.at(xs[w[0]]), y.at(ys[v[1]]));
            let _ = writeln!(
                out,
                r##"<rect x="{px:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="#c0392b" fill-opacity="{level:.3}"/>"##,
                x.at(xs[w[1]]) - px,
                y.at(ys[v[0]]) - py
            );
        }
    }
    let _ = writeln!(
        out,
        r##"<polyline class="grand-best" points="{}" fill="none" stroke="#000" stroke-width="1"/>"##,
        staircase(best, x, y)
    );
    let _ = writeln!(
        out,
        r##"<polyline class="grand-worst" points="{}" fill="none" stroke="#000" stroke-dasharray="4 3" stroke-width="1"/>"##,
        staircase(worst, x, y)
    );
    out
}

/// Two panels: the left shades cells where `a` attains more often than
/// `b`, the right the opposite, both with the grand-best and grand-worst
/// surfaces of the pooled runs.
pub fn eaf_diff_svg(
    title: &str,
    label_a: &str,
    label_b: &str,
    diff: &EafGrid,
    grand_best: &[(f64, f64)],
    grand_worst: &[(f64, f64)],
) -> String {
    let size = 300.0;
    let mut out = String::new();
    header(&mut out, 2.0 * size + 3.0 * MARGIN, size + 2.0 * MARGIN);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle">{}</text>"#,
        size + 1.5 * MARGIN,
        escape(title)
    );
    if diff.x_breaks.is_empty() || diff.y_breaks.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    for (k, (sign, label)) in [(1.0, label_a), (-1.0, label_b)].into_iter().enumerate() {
        let left = MARGIN + k as f64 * (size + MARGIN);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} better</text>"#,
            left + size / 2.0,
            MARGIN - 8.0,
            escape(label)
        );
        let side = if k == 0 { "left" } else { "right" };
        let _ = writeln!(out, r#"<g class="panel-{side}" transform="translate({left:.2},{MARGIN:.2})">"#);
        out.push_str(&eaf_panel(diff, sign, grand_best, grand_worst, size));
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// One interval of the confidence chart.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRow {
    pub label: String,
    pub low: f64,
    pub high: f64,
    pub estimate: f64,
}

/// Horizontal interval chart; intervals that exclude zero are drawn solid
/// and marked with an asterisk.
pub fn ci_svg(title: &str, rows: &[IntervalRow]) -> String {
    let height = 2.0 * MARGIN + 28.0 * rows.len().max(1) as f64;
    let mut out = String::new();
    header(&mut out, WIDTH, height);
    let lo = rows.iter().map(|r| r.low).fold(0.0, f64::min);
    let hi = rows.iter().map(|r| r.high).fold(0.0, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-9);
    let x = Axis::new(lo - pad, hi + pad, MARGIN + 140.0, WIDTH - MARGIN);
    let _ = writeln!(out, r#"<text x="{:.2}" y="24" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#888" stroke-dasharray="3 3"/>"##,
        x.at(0.0),
        MARGIN,
        height - MARGIN
    );
    for (k, r) in rows.iter().enumerate() {
        let cy = MARGIN + 14.0 + 28.0 * k as f64;
        let significant = r.low > 0.0 || r.high < 0.0;
        let dash = if significant { "" } else { r#" stroke-dasharray="4 2""# };
        let mark = if significant { " *" } else { "" };
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}{mark}</text>"#,
            MARGIN + 130.0,
            cy + 4.0,
            escape(&r.label)
        );
        let _ = writeln!(
            out,
            r##"<line class="interval" x1="{:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}" stroke="#1f77b4" stroke-width="2"{dash}/>"##,
            x.at(r.low),
            x.at(r.high)
        );
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{cy:.2}" r="3" fill="#1f77b4"/>"##,
            x.at(r.estimate)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">median of paired HV differences</text>"#,
        (x.from + x.to) / 2.0,
        height - MARGIN + 30.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(svg: &str, side: &str) -> String {
        let start = svg.find(&format!("panel-{side}")).unwrap();
        let body = &svg[start..];
        let open = body.find('>').unwrap() + 1;
        let close = body.find("</g>").unwrap();
        body[open..close].to_string()
    }

    #[test]
    fn swapped_panels_mirror() {
        let grid = EafGrid {
            x_breaks: vec![0.0, 0.5, 1.0],
            y_breaks: vec![0.0, 0.5, 1.0],
            levels: vec![0.0, 0.2, 0.5, -0.1, 0.3, 0.0, 0.0, 0.0, 0.0],
        };
        let neg = EafGrid {
            levels: grid.levels.iter().map(|l| -l).collect(),
            ..grid.clone()
        };
        let best = [(0.0, 1.0), (1.0, 0.0)];
        let worst = [(0.5, 1.0), (1.0, 0.5)];
        let ab = eaf_diff_svg("t", "a", "b", &grid, &best, &worst);
        let ba = eaf_diff_svg("t", "b", "a", &neg, &best, &worst);
        assert_eq!(panel(&ab, "left"), panel(&ba, "right"));
        assert_eq!(panel(&ab, "right"), panel(&ba, "left"));
        assert_eq!(panel(&ab, "left").matches("<rect x=").count(), 2);
        assert_eq!(panel(&ab, "right").matches("<rect x=").count(), 1);
    }

    #[test]
    fn anytime_series_count_and_axis() {
        let band = |l: &str| AnytimeBand {
            label: l.into(),
            points: vec![(500.0, 0.1, 0.01), (100_000.0, 0.9, 0.02)],
        };
        let svg = anytime_svg("dtlz1", 100_000, &[band("ps"), band("big"), band("small")]);
        assert_eq!(svg.matches(r#"class="series""#).count(), 3);
        // right edge of the plot is the budget
        assert!(svg.contains(&format!("{:.2},", WIDTH - MARGIN)));
        assert!(svg.contains(">100000<"));
    }

    #[test]
    fn ci_marks_significance() {
        let rows = [
            IntervalRow { label: "big - ps".into(), low: -0.2, high: -0.1, estimate: -0.15 },
            IntervalRow { label: "small - ps".into(), low: -0.1, high: 0.1, estimate: 0.0 },
        ];
        let svg = ci_svg("5000", &rows);
        assert_eq!(svg.matches(" *</text>").count(), 1);
        assert_eq!(svg.matches(r#"class="interval""#).count(), 2);
    }
}
