//! Self-contained SVG chart for sweep results.
//!
//! One fixed-size canvas: the dimension interval as a shaded band between
//! the lo/hi polylines, the slope-point estimate as a line over it. Every
//! coordinate is formatted with fixed precision so a given sweep always
//! produces identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use fractal_pressure::error::{FpError, Result};

use crate::report::write_atomic;
use crate::sweep::SweepResult;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 56.0;

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_hi - self.x_lo).max(1e-12);
        MARGIN_L + (v - self.x_lo) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_hi - self.y_lo).max(1e-12);
        HEIGHT - MARGIN_B - (v - self.y_lo) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn polyline_points(frame: &Frame, xs: &[f64], ys: &[f64]) -> String {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{:.3},{:.3}", frame.x(x), frame.y(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders `sweep` to `path`. Needs at least two grid points; byte output is
/// a pure function of the sweep values.
pub fn emit_svg(sweep: &SweepResult, path: &Path) -> Result<()> {
    let pts = &sweep.points;
    if pts.len() < 2 {
        return Err(FpError::EmptyInput(
            "an SVG chart needs at least two sweep points",
        ));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.lambda).collect();
    let lo: Vec<f64> = pts.iter().map(|p| p.dim_lo).collect();
    let hi: Vec<f64> = pts.iter().map(|p| p.dim_hi).collect();
    let slope: Vec<f64> = pts.iter().map(|p| p.slope).collect();
    if lo
        .iter()
        .chain(&hi)
        .chain(&slope)
        .chain(&xs)
        .any(|v| !v.is_finite())
    {
        return Err(FpError::Config(
            "sweep contains non-finite values; nothing sensible to plot".into(),
        ));
    }

    let x_lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let data_lo = lo.iter().cloned().fold(f64::INFINITY, f64::min);
    let data_hi = hi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((data_hi - data_lo) * 0.05).max(1e-3);
    let frame = Frame {
        x_lo,
        x_hi,
        y_lo: data_lo - pad,
        y_hi: data_hi + pad,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(svg, "<!-- x-domain {:.6} {:.6} -->", frame.x_lo, frame.x_hi);
    let _ = writeln!(svg, "<!-- y-domain {:.6} {:.6} -->", frame.y_lo, frame.y_hi);
    let _ = writeln!(
        svg,
        r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );

    // Axes with five ticks each.
    let x0 = frame.x(frame.x_lo);
    let x1 = frame.x(frame.x_hi);
    let y0 = frame.y(frame.y_lo);
    let y1 = frame.y(frame.y_hi);
    let _ = writeln!(
        svg,
        r##"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y0:.3}" stroke="#444444"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x0:.3}" y2="{y1:.3}" stroke="#444444"/>"##
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let vx = frame.x_lo + t * (frame.x_hi - frame.x_lo);
        let vy = frame.y_lo + t * (frame.y_hi - frame.y_lo);
        let px = frame.x(vx);
        let py = frame.y(vy);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.3}" y1="{y0:.3}" x2="{px:.3}" y2="{:.3}" stroke="#444444"/>"##,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{px:.3}" y="{:.3}" text-anchor="middle">{vx:.3}</text>"##,
            y0 + 20.0
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{:.3}" y1="{py:.3}" x2="{x0:.3}" y2="{py:.3}" stroke="#444444"/>"##,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.3}" y="{:.3}" text-anchor="end">{vy:.3}</text>"##,
            x0 - 9.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.3}" y="{:.3}" text-anchor="middle">parameter</text>"##,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r##"<text x="16" y="{:.3}" text-anchor="middle" transform="rotate(-90 16 {:.3})">dimension</text>"##,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    // Interval band: lo polyline forward, hi polyline reversed.
    let mut band = polyline_points(&frame, &xs, &lo);
    let xs_rev: Vec<f64> = xs.iter().rev().cloned().collect();
    let hi_rev: Vec<f64> = hi.iter().rev().cloned().collect();
    band.push(' ');
    band.push_str(&polyline_points(&frame, &xs_rev, &hi_rev));
    let _ = writeln!(
        svg,
        r##"<polygon points="{band}" fill="#9ecae1" fill-opacity="0.55" stroke="none"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#3182bd" stroke-width="1"/>"##,
        polyline_points(&frame, &xs, &lo)
    );
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#3182bd" stroke-width="1"/>"##,
        polyline_points(&frame, &xs, &hi)
    );
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#de2d26" stroke-width="1.8"/>"##,
        polyline_points(&frame, &xs, &slope)
    );
    for (&x, &s) in xs.iter().zip(&slope) {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="#de2d26"/>"##,
            frame.x(x),
            frame.y(s)
        );
    }
    let _ = writeln!(svg, "</svg>");

    write_atomic(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{SweepPoint, SweepResult};

    fn point(lambda: f64, lo: f64, hi: f64, slope: f64) -> SweepPoint {
        SweepPoint {
            lambda,
            lambda_exact: format!("{lambda}"),
            dim_lo: lo,
            dim_hi: hi,
            slope,
            converged: true,
            wall_ms: 0,
        }
    }

    fn result_of(points: Vec<SweepPoint>) -> SweepResult {
        SweepResult {
            depths: (6, 10),
            refine: 2,
            points,
        }
    }

    fn y_domain(svg: &str) -> (f64, f64) {
        let line = svg
            .lines()
            .find(|l| l.starts_with("<!-- y-domain"))
            .expect("y-domain comment");
        let parts: Vec<&str> = line.split_whitespace().collect();
        (parts[2].parse().unwrap(), parts[3].parse().unwrap())
    }

    #[test]
    fn too_few_points_error_out() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chart.svg");
        let empty = result_of(vec![]);
        assert!(matches!(
            emit_svg(&empty, &path).unwrap_err(),
            FpError::EmptyInput(_)
        ));
        let single = result_of(vec![point(0.0, 0.6, 0.7, 0.65)]);
        assert!(emit_svg(&single, &path).is_err());
        assert!(!path.exists(), "no artifact on error");
    }

    #[test]
    fn two_points_make_a_single_segment_chart() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chart.svg");
        let two = result_of(vec![point(0.0, 0.6, 0.7, 0.65), point(1.0, 0.95, 1.0, 0.98)]);
        emit_svg(&two, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        // Each polyline carries exactly two coordinate pairs.
        for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
            let points = line.split("points=\"").nth(1).unwrap();
            let points = points.split('"').next().unwrap();
            assert_eq!(points.split(' ').count(), 2, "segment count in {line}");
        }
        assert_eq!(
            svg.lines().filter(|l| l.starts_with("<circle")).count(),
            2
        );
    }

    #[test]
    fn lambda_like_band_keeps_the_y_domain_inside_the_anchor_window() {
        // Nine points shaped like the λ sweep: lo from 0.631 up to 1, hi a
        // touch above, slope in between.
        let mut pts = Vec::new();
        for i in 0..=8 {
            let t = i as f64 / 8.0;
            let lo = 0.631 + (1.0 - 0.631) * t;
            let hi = (lo + 0.08 * (1.0 - t)).min(1.0);
            pts.push(point(t, lo, hi, (lo + hi) / 2.0));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chart.svg");
        emit_svg(&result_of(pts), &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        let (y_lo, y_hi) = y_domain(&svg);
        assert!(y_lo >= 0.5 && y_hi <= 1.05, "y-domain [{y_lo}, {y_hi}]");
        assert!(y_lo < 0.631 && y_hi > 1.0, "band must cover the data");
    }

    #[test]
    fn identical_sweeps_render_identical_bytes() {
        let build = || {
            result_of(vec![
                point(0.0, 0.6309, 0.71, 0.656),
                point(0.5, 0.8, 0.86, 0.83),
                point(1.0, 1.0, 1.0, 1.0),
            ])
        };
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.svg");
        let b = dir.path().join("b.svg");
        emit_svg(&build(), &a).unwrap();
        emit_svg(&build(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
