//! Self-contained SVG plots.

use std::f64::consts::TAU;
use std::fmt::Write;

use crate::boundary_map::BoundaryTable;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let m = lo.abs().max(1.0) * 1e-3;
        return (lo - m, hi + m);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}

/// Line plot of named series of `(x, y)` points.
pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(&str, Vec<(f64, f64)>)],
) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (x0, x1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        out,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{x:.3}</text>",
            sx(x),
            H - PAD + 16.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{y:.3}</text>",
            PAD - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (n, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.join(" ")
        );
        let ly = PAD + 16.0 + 16.0 * n as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{}\" y=\"{}\">{}</text>",
            W - PAD - 110.0,
            W - PAD - 90.0,
            W - PAD - 84.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Polar plot of `nu -> mu`: radius `1 + (mu - mean) / spread` around a unit
/// reference circle, failed directions marked in red.
pub fn polar_plot(table: &BoundaryTable) -> String {
    let mut out = String::new();
    header(&mut out, &format!("boundary map, psi = {}", table.psi));
    let (c, r0) = ([W / 2.0, H / 2.0 + 10.0], 0.3 * H);
    let values: Vec<(f64, f64)> = table
        .successes()
        .map(|e| (e.angle, e.mu().expect("success")))
        .collect();
    let (lo, hi) = range(values.iter().map(|v| v.1));
    let radius = |mu: f64| r0 * (0.5 + (mu - lo) / (hi - lo));
    let _ = writeln!(
        out,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#bbb\"/>",
        c[0],
        c[1],
        r0 * 0.5
    );
    let _ = writeln!(
        out,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#bbb\"/>",
        c[0],
        c[1],
        r0 * 1.5
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\">{lo:.4}</text>",
        c[0] + r0 * 0.5 + 4.0,
        c[1] - 4.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\">{hi:.4}</text>",
        c[0] + r0 * 1.5 + 4.0,
        c[1] - 4.0
    );
    let pt = |a: f64, r: f64| [c[0] + r * a.cos(), c[1] - r * a.sin()];
    let path: Vec<String> = values
        .iter()
        .chain(values.first())
        .map(|&(a, mu)| {
            let p = pt(a, radius(mu));
            format!("{:.2},{:.2}", p[0], p[1])
        })
        .collect();
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
        COLORS[0],
        path.join(" ")
    );
    for e in &table.entries {
        let (r, color) = match e.mu() {
            Some(mu) => (radius(mu), if e.rational { "#2ca02c" } else { COLORS[0] }),
            None => (r0, "#d62728"),
        };
        let p = pt(e.angle, r);
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
            p[0], p[1]
        );
    }
    for k in 0..4 {
        let a = k as f64 * TAU / 4.0;
        let p = pt(a, r0 * 1.6);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}&#176;</text>",
            p[0],
            p[1] + 4.0,
            k * 90
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = line_plot(
            "a < b",
            "x",
            "y",
            &[(
                "sin",
                (0..20).map(|k| (k as f64, (k as f64).sin())).collect(),
            )],
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b") && s.contains("<polyline"));
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn constant_series_does_not_divide_by_zero() {
        let s = line_plot("flat", "x", "y", &[("c", vec![(0.0, 1.0), (1.0, 1.0)])]);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }
}
