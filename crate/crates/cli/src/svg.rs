//! Minimal SVG 1.1 scatter plots.

use std::fmt::Write;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Plane coordinates for reduced points: index against value for `k = 1`,
/// the first two coordinates for `k = 2`, and an isometric view of the
/// first three otherwise.
pub fn project(z: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let (c, s) = ((std::f64::consts::PI / 6.0).cos(), 0.5);
    z.iter()
        .enumerate()
        .map(|(i, p)| match p.len() {
            0 => (i as f64, 0.0),
            1 => (i as f64, p[0]),
            2 => (p[0], p[1]),
            _ => ((p[0] - p[1]) * c, p[2] + (p[0] + p[1]) * s),
        })
        .collect()
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

pub fn scatter(points: &[(f64, f64)], title: &str, k: usize) -> String {
    let (x0, x1) = span(points.iter().map(|p| p.0));
    let (y0, y1) = span(points.iter().map(|p| p.1));
    let inner = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner;
    // SVG y grows downwards
    let py = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * inner;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">
<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>
<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="#888"/>
<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="13">{} (k = {k}, {} points)</text>"##,
        MARGIN - 12.0,
        escape(title),
        points.len()
    );
    let _ = writeln!(out, r##"<g fill="#1f5fa8" fill-opacity="0.8">"##);
    for &(x, y) in points {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, px(x), py(y));
    }
    out.push_str("</g>\n</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
