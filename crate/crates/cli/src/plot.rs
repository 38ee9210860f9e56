//! Minimal self-contained SVG line chart of accuracy per layer.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// `points` are `(layer, mean, std)` with accuracies as fractions; the chart
/// shows percentages with a mean ± std band.
pub fn layer_chart_svg(title: &str, points: &[(usize, f64, f64)]) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let max_x = points.iter().map(|p| p.0).max().unwrap_or(0).max(1) as f64;
    let lo = points
        .iter()
        .map(|p| 100.0 * (p.1 - p.2))
        .fold(100.0f64, f64::min);
    let y_min = ((lo / 10.0).floor() * 10.0).clamp(0.0, 90.0);
    let y_max = 100.0;
    let sx = |x: f64| LEFT + pw * x / max_x;
    let sy = |y: f64| TOP + ph * (1.0 - (y.clamp(y_min, y_max) - y_min) / (y_max - y_min));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );

    let mut t = y_min;
    while t <= y_max + 1e-9 {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{t:.0}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
        t += 10.0;
    }
    let step = if max_x > 12.0 { 2 } else { 1 };
    for l in (0..=max_x as usize).step_by(step) {
        let x = sx(l as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{l}</text>"#,
            H - BOTTOM + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="black"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{0:.1}" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">layer</text><text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">accuracy (%)</text>"#,
        LEFT + pw / 2.0,
        H - 10.0,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    if !points.is_empty() {
        let upper: Vec<String> = points
            .iter()
            .map(|&(l, m, sd)| format!("{:.1},{:.1}", sx(l as f64), sy(100.0 * (m + sd))))
            .collect();
        let lower: Vec<String> = points
            .iter()
            .rev()
            .map(|&(l, m, sd)| format!("{:.1},{:.1}", sx(l as f64), sy(100.0 * (m - sd))))
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{} {}" fill="#4a7ab5" fill-opacity="0.2" stroke="none"/>"##,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = points
            .iter()
            .map(|&(l, m, _)| format!("{:.1},{:.1}", sx(l as f64), sy(100.0 * m)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f4e8c" stroke-width="2"/>"##,
            line.join(" ")
        );
        for &(l, m, _) in points {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#1f4e8c"/>"##,
                sx(l as f64),
                sy(100.0 * m)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
