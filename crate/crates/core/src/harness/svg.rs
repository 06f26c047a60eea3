//! Minimal line chart: log10 of suboptimality against elapsed seconds, one
//! polyline per series.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const FLOOR: f64 = 1e-16;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub struct Series {
    pub label: String,
    /// `(elapsed seconds, suboptimality)` pairs.
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render_chart(title: &str, series: &[Series]) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let x_max = pts().map(|p| p.0).fold(0.0f64, f64::max).max(1e-9);
    let logs = || pts().map(|p| p.1.max(FLOOR).log10());
    let mut y_lo = logs().fold(f64::INFINITY, f64::min).floor();
    let mut y_hi = logs().fold(f64::NEG_INFINITY, f64::max).ceil();
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (-1.0, 0.0);
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| {
        HEIGHT - MARGIN - (v.max(FLOOR).log10() - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN)
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>"#
    );
    let mut e = y_lo as i32;
    while e as f64 <= y_hi {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">1e{e}</text>"#,
            x0 - 4.0,
            y + 4.0
        );
        e += 1;
    }
    let _ = writeln!(
        out,
        r#"<text x="{x1}" y="{}" text-anchor="end">{x_max:.3} s</text>"#,
        y0 + 18.0
    );
    let _ = writeln!(out, r#"<text x="{x0}" y="{}">0 s</text>"#, y0 + 18.0);

    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, v)| format!("{:.1},{:.1}", sx(x), sy(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" fill="{colour}" text-anchor="end">{}</text>"#,
            x1 - 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
