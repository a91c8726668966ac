//! SVG rendering of 1D and 2D pavings.
//!
//! Output is a pure function of the paving: coordinates are printed with a
//! fixed number of decimals and boxes are drawn in class order, so the bytes
//! are stable across runs and platforms.

use std::fmt::Write;

use thiserror::Error;

use crate::expr::{ExprError, ExprVector};
use crate::interval::IntervalBox;
use crate::paving::{BoxClass, Paving};

pub const ACCEPTED_FILL: &str = "#2ca02c";
pub const REJECTED_FILL: &str = "#d62728";
pub const BOUNDARY_FILL: &str = "#ffd700";

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 40.0;
const CURVE_HEIGHT: f64 = 320.0;
const STRIP_HEIGHT: f64 = 40.0;
const CURVE_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("can only plot 1D or 2D pavings, this one is {0}D")]
    Dimension(usize),
    #[error("paving model: {0}")]
    Model(#[from] ExprError),
}

pub fn fill(class: BoxClass) -> &'static str {
    match class {
        BoxClass::Accepted => ACCEPTED_FILL,
        BoxClass::Rejected => REJECTED_FILL,
        BoxClass::Boundary => BOUNDARY_FILL,
    }
}

/// Linear map from `[lo, hi]` onto `[a, b]` (either orientation).
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        Self { lo, hi, a, b }
    }

    fn at(&self, v: f64) -> f64 {
        let t = if self.hi > self.lo { (v - self.lo) / (self.hi - self.lo) } else { 0.5 };
        self.a + t * (self.b - self.a)
    }
}

pub fn render(paving: &Paving) -> Result<String, SvgError> {
    match paving.adjustments.dim() {
        1 => render_1d(paving),
        2 => Ok(render_2d(paving)),
        n => Err(SvgError::Dimension(n)),
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn label(out: &mut String, x: f64, y: f64, anchor: &str, text: impl std::fmt::Display) {
    let _ = writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
    );
}

fn rect(out: &mut String, x0: f64, y0: f64, x1: f64, y1: f64, class: BoxClass) {
    let (x, w) = (x0.min(x1), (x1 - x0).abs());
    let (y, h) = (y0.min(y1), (y1 - y0).abs());
    let _ = writeln!(
        out,
        r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{}" stroke="black" stroke-width="0.2"/>"#,
        fill(class)
    );
}

fn render_2d(paving: &Paving) -> String {
    let side = WIDTH - 2.0 * MARGIN;
    let r = &paving.adjustments;
    let sx = Scale::new(r.axis(0).lo(), r.axis(0).hi(), MARGIN, MARGIN + side);
    // SVG y grows downwards.
    let sy = Scale::new(r.axis(1).lo(), r.axis(1).hi(), MARGIN + side, MARGIN);
    let mut out = String::new();
    header(&mut out, WIDTH, WIDTH);
    for class in BoxClass::ALL {
        for b in paving.boxes(class) {
            let (x, y) = (b.axis(0), b.axis(1));
            rect(&mut out, sx.at(x.lo()), sy.at(y.lo()), sx.at(x.hi()), sy.at(y.hi()), class);
        }
    }
    frame(&mut out, MARGIN, MARGIN, side, side);
    label(&mut out, MARGIN, MARGIN + side + 15.0, "middle", r.axis(0).lo());
    label(&mut out, MARGIN + side, MARGIN + side + 15.0, "middle", r.axis(0).hi());
    label(&mut out, MARGIN - 4.0, MARGIN + side, "end", r.axis(1).lo());
    label(&mut out, MARGIN - 4.0, MARGIN + 4.0, "end", r.axis(1).hi());
    out.push_str("</svg>\n");
    out
}

fn frame(out: &mut String, x: f64, y: f64, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="none" stroke="black" stroke-width="1"/>"#
    );
}

/// Curve panel with the performance bounds on top, class strip underneath.
fn render_1d(paving: &Paving) -> Result<String, SvgError> {
    let model = ExprVector::parse(&paving.model, 1)?;
    let r = paving.adjustments.axis(0);
    let xs: Vec<f64> = (0..=CURVE_SAMPLES)
        .map(|i| r.lo() + r.width() * i as f64 / CURVE_SAMPLES as f64)
        .collect();
    let curves: Vec<Vec<Option<f64>>> = model
        .components()
        .iter()
        .map(|e| xs.iter().map(|&x| e.eval_unchecked(&[x])).collect())
        .collect();

    let (mut ylo, mut yhi) = value_range(&paving.performance);
    for v in curves.iter().flatten().flatten() {
        ylo = ylo.min(*v);
        yhi = yhi.max(*v);
    }
    let pad = 0.05 * (yhi - ylo).max(f64::MIN_POSITIVE);
    let (ylo, yhi) = (ylo - pad, yhi + pad);

    let plot_w = WIDTH - 2.0 * MARGIN;
    let strip_top = MARGIN + CURVE_HEIGHT + 20.0;
    let height = strip_top + STRIP_HEIGHT + MARGIN;
    let sx = Scale::new(r.lo(), r.hi(), MARGIN, MARGIN + plot_w);
    let sy = Scale::new(ylo, yhi, MARGIN + CURVE_HEIGHT, MARGIN);

    let mut out = String::new();
    header(&mut out, WIDTH, height);
    frame(&mut out, MARGIN, MARGIN, plot_w, CURVE_HEIGHT);
    for p in paving.performance.axes() {
        for bound in [p.lo(), p.hi()] {
            let y = sy.at(bound);
            let _ = writeln!(
                out,
                r#"<line x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="gray" stroke-dasharray="4 3"/>"#,
                MARGIN,
                MARGIN + plot_w
            );
            label(&mut out, MARGIN - 4.0, y + 4.0, "end", bound);
        }
    }
    for curve in &curves {
        // Invalid samples split the curve into separate polylines.
        for run in curve
            .iter()
            .zip(&xs)
            .collect::<Vec<_>>()
            .split(|(v, _)| v.is_none())
            .filter(|run| run.len() > 1)
        {
            out.push_str(r#"<polyline fill="none" stroke="black" stroke-width="1.2" points=""#);
            for (i, (v, x)) in run.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{:.2},{:.2}", sx.at(**x), sy.at(v.expect("split on None")));
            }
            out.push_str("\"/>\n");
        }
    }
    for class in BoxClass::ALL {
        for b in paving.boxes(class) {
            let x = b.axis(0);
            rect(&mut out, sx.at(x.lo()), strip_top, sx.at(x.hi()), strip_top + STRIP_HEIGHT, class);
        }
    }
    frame(&mut out, MARGIN, strip_top, plot_w, STRIP_HEIGHT);
    let base = strip_top + STRIP_HEIGHT + 15.0;
    label(&mut out, MARGIN, base, "middle", r.lo());
    label(&mut out, MARGIN + plot_w, base, "middle", r.hi());
    out.push_str("</svg>\n");
    Ok(out)
}

fn value_range(p: &IntervalBox) -> (f64, f64) {
    p.axes()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), iv| (lo.min(iv.lo()), hi.max(iv.hi())))
}
