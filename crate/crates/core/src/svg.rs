//! Static SVG figures: rate regions and power sweeps.
//!
//! Axis ranges fit the data with a 5% margin. Output is plain text with
//! fixed number formatting, so identical inputs give identical files.

use std::fmt::Write as _;

use crate::bounds::SweepTable;
use crate::region::Region2D;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD_L: f64 = 64.0;
const PAD_R: f64 = 24.0;
const PAD_T: f64 = 24.0;
const PAD_B: f64 = 52.0;

#[derive(Debug, Clone, Copy)]
struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone, origin: bool) -> Self {
        let (mut x0, mut x1) = min_max(xs);
        let (mut y0, mut y1) = min_max(ys);
        if origin {
            x0 = x0.min(0.0);
            y0 = y0.min(0.0);
        }
        let widen = |a: &mut f64, b: &mut f64| {
            if !(*b - *a > 0.0) {
                *a -= 0.5;
                *b += 0.5;
            }
            let m = 0.05 * (*b - *a);
            *a -= m;
            *b += m;
        };
        widen(&mut x0, &mut x1);
        widen(&mut y0, &mut y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - PAD_L - PAD_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - PAD_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - PAD_T - PAD_B)
    }
}

fn min_max(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

fn frame(out: &mut String, ax: &Axes, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (PAD_L, WIDTH - PAD_R, PAD_T, HEIGHT - PAD_B);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for i in 0..=5 {
        let fx = ax.x0 + (ax.x1 - ax.x0) * i as f64 / 5.0;
        let fy = ax.y0 + (ax.y1 - ax.y0) * i as f64 / 5.0;
        let (px, py) = (ax.px(fx), ax.py(fy));
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{t}" x2="{px:.2}" y2="{b}" stroke="#ddd"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{fx:.3}</text>"##,
            b + 16.0
        );
        let _ = writeln!(
            out,
            r##"<line x1="{l}" y1="{py:.2}" x2="{r}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{fy:.3}</text>"##,
            l - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        0.5 * (l + r),
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        0.5 * (t + b),
        0.5 * (t + b),
        escape(ylabel)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One filled polygon in a region figure.
#[derive(Debug, Clone)]
pub struct RegionLayer<'a> {
    pub region: &'a Region2D,
    pub fill: &'a str,
    pub stroke: &'a str,
    pub opacity: f64,
    pub label: String,
}

/// Stacks `layers` in order (first at the bottom) on `R1`/`R2` axes.
pub fn regions_svg(layers: &[RegionLayer<'_>], notes: &[String]) -> String {
    let pts = layers.iter().flat_map(|l| l.region.vertices.iter());
    let ax = Axes::fit(pts.clone().map(|p| p[0]), pts.map(|p| p[1]), true);
    let mut out = String::new();
    header(&mut out);
    frame(&mut out, &ax, "R1 (bits/symbol)", "R2 (bits/symbol)");
    for layer in layers {
        let v = &layer.region.vertices;
        if v.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, p) in v.iter().enumerate() {
            let _ = write!(d, "{}{:.3},{:.3} ", if i == 0 { "M" } else { "L" }, ax.px(p[0]), ax.py(p[1]));
        }
        d.push('Z');
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="{}" fill-opacity="{:.3}" stroke="{}" stroke-width="1.5"/>"#,
            layer.fill, layer.opacity, layer.stroke
        );
    }
    legend(&mut out, layers.iter().map(|l| (l.stroke, l.label.as_str())), notes);
    out.push_str("</svg>\n");
    out
}

fn legend<'a>(out: &mut String, items: impl Iterator<Item = (&'a str, &'a str)>, notes: &[String]) {
    let x = WIDTH - PAD_R - 200.0;
    let mut y = PAD_T + 18.0;
    for (color, label) in items {
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
            y - 4.0,
            x + 18.0,
            y - 4.0,
            x + 24.0,
            escape(label)
        );
        y += 16.0;
    }
    for note in notes {
        let _ = writeln!(out, r#"<text x="{x}" y="{y:.2}">{}</text>"#, escape(note));
        y += 16.0;
    }
}

/// Rate curves of a sweep against `P₁` in dBm.
pub fn sweep_svg(table: &SweepTable) -> String {
    type Col = fn(&crate::bounds::BoundSet) -> f64;
    let series: [(&str, &str, Col); 4] = [
        ("U1", "green", |r| r.u1),
        ("U_sum", "blue", |r| r.u_sum),
        ("AWGN", "red", |r| r.awgn1),
        ("Interference as noise", "purple", |r| r.ian1),
    ];
    let ys = table
        .rows
        .iter()
        .flat_map(|r| series.iter().map(move |s| (s.2)(r)));
    let ax = Axes::fit(table.p_dbm.iter().copied(), ys, false);
    let mut out = String::new();
    header(&mut out);
    frame(&mut out, &ax, "P1 (dBm)", "Rate (bits per symbol)");
    for (_, color, f) in &series {
        let mut d = String::new();
        for (i, (x, r)) in table.p_dbm.iter().zip(&table.rows).enumerate() {
            let _ = write!(d, "{}{:.3},{:.3} ", if i == 0 { "M" } else { "L" }, ax.px(*x), ax.py(f(r)));
        }
        let dash = if *color == "red" { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.trim_end());
    }
    legend(&mut out, series.iter().map(|s| (s.1, s.0)), &[]);
    out.push_str("</svg>\n");
    out
}
