//! Standalone SVG 1.1 polyline plots with byte-stable output.

use std::fmt::Write as _;
use std::path::Path;

use quasiflow::experiments::{write_atomic, SeparationRecord};
use quasiflow::RealField;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

pub enum Plot<'a> {
    /// `n` against `d0`, `d_tau` and `weak_ratio`, each scaled to its own range.
    Records(&'a [SeparationRecord]),
    /// `x` against `u`.
    Field(&'a RealField),
}

struct Series {
    label: &'static str,
    points: Vec<(f64, f64)>,
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn scale(v: f64, (lo, hi): (f64, f64), out_lo: f64, out_hi: f64) -> f64 {
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

fn series(plot: &Plot) -> Vec<Series> {
    match plot {
        Plot::Records(recs) => {
            let pick = |label, f: fn(&SeparationRecord) -> f64| Series {
                label,
                points: recs.iter().map(|r| (r.n as f64, f(r))).filter(|p| p.1.is_finite()).collect(),
            };
            if recs.is_empty() {
                return Vec::new();
            }
            vec![pick("d0", |r| r.d0), pick("d_tau", |r| r.d_tau), pick("weak_ratio", |r| r.weak_ratio)]
        }
        Plot::Field(u) => {
            let g = u.grid();
            let points = u.samples().iter().enumerate().map(|(j, &v)| (g.node(j), v)).collect();
            vec![Series { label: "u", points }]
        }
    }
}

/// Renders the plot; the same input always yields the same bytes.
pub fn render_svg(plot: &Plot) -> String {
    let all = series(plot);
    let (xl, yl) = match plot {
        Plot::Records(_) => ("n", "scaled value"),
        Plot::Field(_) => ("x", "u"),
    };
    let xr = range(all.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{xl}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(out, r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})" text-anchor="middle">{yl}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);
    let _ = writeln!(out, r#"<text x="{x0}" y="{}" font-size="10" text-anchor="middle">{:.4}</text>"#, y0 + 14.0, xr.0);
    let _ = writeln!(out, r#"<text x="{x1}" y="{}" font-size="10" text-anchor="middle">{:.4}</text>"#, y0 + 14.0, xr.1);

    for (i, s) in all.iter().enumerate() {
        let yr = range(s.points.iter().map(|p| p.1));
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", scale(x, xr, x0, x1), scale(y, yr, y0, y1)))
            .collect();
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{} [{:.4e}, {:.4e}]</text>"#,
            x0 + 8.0,
            y1 + 14.0 * (i as f64 + 1.0),
            s.label,
            yr.0,
            yr.1
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(plot: &Plot, path: &Path) -> quasiflow::Result<()> {
    write_atomic(path, render_svg(plot).as_bytes())
}
