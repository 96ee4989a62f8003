//! Minimal static SVG for bifurcation diagrams.

use std::fmt::Write as _;

pub struct Series {
    pub group: usize,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 800.0;
const H: f64 = 560.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn num(x: f64) -> String {
    format!("{x:.3}")
}

/// Plots each series as a polyline over `window` in lambda, with fold markers.
pub fn render(title: &str, window: (f64, f64), series: &[Series], folds: &[(f64, f64)]) -> String {
    let ymax = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1.abs()))
        .chain(folds.iter().map(|f| f.1.abs()))
        .fold(0.0, f64::max)
        .max(1e-12)
        * 1.05;
    let (lo, hi) = window;
    let sx = |l: f64| MARGIN + (l - lo) / (hi - lo) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H / 2.0 - y / ymax * (H / 2.0 - MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#, W / 2.0);
    let (x0, x1, y0, y1) = (sx(lo), sx(hi), sy(ymax), sy(-ymax));
    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, num(x0), num(y0), num(x1 - x0), num(y1 - y0));
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#, num(x0), num(sy(0.0)), num(x1), num(sy(0.0)));
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#, num(sx(0.0)), num(y0), num(sx(0.0)), num(y1));
    }
    for (label, x, anchor) in [(lo, x0, "start"), (hi, x1, "end")] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{label:.4}</text>"#, num(x), num(y1 + 18.0));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">lambda</text>"#, W / 2.0, num(y1 + 36.0));
    let _ = writeln!(s, r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">signed |x|</text>"#, H / 2.0, H / 2.0);
    let mut groups: Vec<usize> = series.iter().map(|s| s.group).collect();
    groups.dedup();
    for ser in series {
        let color = PALETTE[ser.group % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(l, y)| format!("{},{}", num(sx(l)), num(sy(y)))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
    }
    for &(l, y) in folds {
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="4" fill="none" stroke="black"/>"#, num(sx(l)), num(sy(y)));
    }
    for (i, g) in groups.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let color = PALETTE[g % PALETTE.len()];
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, num(x1 - 70.0), num(y), num(x1 - 50.0), num(y));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">E_{g}</text>"#, num(x1 - 45.0), num(y + 4.0));
    }
    s.push_str("</svg>\n");
    s
}
