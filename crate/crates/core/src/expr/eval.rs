//! Scalar and natural-interval evaluation.
//!
//! Domain violations (log of a non-positive value, division by zero, tan at
//! a pole, overflow to a non-finite value) yield `None` and propagate to the
//! root. The interval extension encloses every valid scalar evaluation over
//! its box; transcendental bounds are widened outward by two ulps to absorb
//! libm rounding.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{BinaryOp, Expr, ExprError, ExprVector, UnaryOp};
use crate::interval::{Interval, IntervalBox};

/// Scalar tan is invalid within this distance of `π/2 + kπ`.
pub const TAN_POLE_TOLERANCE: f64 = 1e-12;

/// Beyond this magnitude the float lattice of critical points of sin, cos
/// and tan is too coarse to locate; ranges fall back to the full codomain.
const PERIODIC_ARGUMENT_LIMIT: f64 = 1e8;

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[inline]
pub fn apply_unary(op: UnaryOp, v: f64) -> Option<f64> {
    match op {
        UnaryOp::Exp => finite(v.exp()),
        UnaryOp::Log => (v > 0.0).then(|| v.ln()),
        UnaryOp::Sin => Some(v.sin()),
        UnaryOp::Cos => Some(v.cos()),
        UnaryOp::Tan => {
            let k = ((v - FRAC_PI_2) / PI).round();
            if (v - (FRAC_PI_2 + k * PI)).abs() < TAN_POLE_TOLERANCE {
                None
            } else {
                finite(v.tan())
            }
        }
        UnaryOp::Neg => Some(-v),
    }
}

#[inline]
pub fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Option<f64> {
    match op {
        BinaryOp::Add => finite(a + b),
        BinaryOp::Sub => finite(a - b),
        BinaryOp::Mul => finite(a * b),
        BinaryOp::Div => {
            if b == 0.0 {
                None
            } else {
                finite(a / b)
            }
        }
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    (lo.next_down().next_down(), hi.next_up().next_up())
}

/// Whether `offset + k·period` lies in `x` for some integer `k`.
fn hits_lattice(x: Interval, offset: f64, period: f64, slack: f64) -> bool {
    let k = ((x.lo() - slack - offset) / period).ceil();
    offset + k * period <= x.hi() + slack
}

fn periodic_range(x: Interval, lo_val: f64, hi_val: f64, max_at: f64, min_at: f64) -> Option<Interval> {
    let unit = Interval::checked(-1.0, 1.0);
    if x.width() >= TAU || x.lo().abs().max(x.hi().abs()) > PERIODIC_ARGUMENT_LIMIT {
        return unit;
    }
    let slack = 4.0 * f64::EPSILON * x.lo().abs().max(x.hi().abs()).max(1.0);
    let (mut lo, mut hi) = widen(lo_val.min(hi_val), lo_val.max(hi_val));
    if hits_lattice(x, max_at, TAU, slack) {
        hi = 1.0;
    }
    if hits_lattice(x, min_at, TAU, slack) {
        lo = -1.0;
    }
    Interval::checked(lo.max(-1.0), hi.min(1.0))
}

pub fn interval_unary(op: UnaryOp, x: Interval) -> Option<Interval> {
    match op {
        UnaryOp::Exp => {
            let (lo, hi) = widen(x.lo().exp(), x.hi().exp());
            Interval::checked(lo.max(0.0), hi)
        }
        UnaryOp::Log => {
            if x.lo() <= 0.0 {
                return None;
            }
            let (lo, hi) = widen(x.lo().ln(), x.hi().ln());
            Interval::checked(lo, hi)
        }
        UnaryOp::Sin => periodic_range(x, x.lo().sin(), x.hi().sin(), FRAC_PI_2, -FRAC_PI_2),
        UnaryOp::Cos => periodic_range(x, x.lo().cos(), x.hi().cos(), 0.0, PI),
        UnaryOp::Tan => {
            if x.lo().abs().max(x.hi().abs()) > PERIODIC_ARGUMENT_LIMIT {
                return None;
            }
            let slack = TAN_POLE_TOLERANCE;
            if x.width() >= PI || hits_lattice(x, FRAC_PI_2, PI, slack) {
                return None;
            }
            let (a, b) = (x.lo().tan(), x.hi().tan());
            if a > b {
                return None;
            }
            let (lo, hi) = widen(a, b);
            Interval::checked(lo, hi)
        }
        UnaryOp::Neg => Interval::checked(-x.hi(), -x.lo()),
    }
}

fn hull4(a: f64, b: f64, c: f64, d: f64) -> Option<Interval> {
    Interval::checked(a.min(b).min(c).min(d), a.max(b).max(c).max(d))
}

pub fn interval_binary(op: BinaryOp, a: Interval, b: Interval) -> Option<Interval> {
    match op {
        BinaryOp::Add => Interval::checked(a.lo() + b.lo(), a.hi() + b.hi()),
        BinaryOp::Sub => Interval::checked(a.lo() - b.hi(), a.hi() - b.lo()),
        BinaryOp::Mul => hull4(
            a.lo() * b.lo(),
            a.lo() * b.hi(),
            a.hi() * b.lo(),
            a.hi() * b.hi(),
        ),
        BinaryOp::Div => {
            if b.contains(0.0) {
                return None;
            }
            hull4(
                a.lo() / b.lo(),
                a.lo() / b.hi(),
                a.hi() / b.lo(),
                a.hi() / b.hi(),
            )
        }
    }
}

impl Expr {
    fn check_arity(&self, found: usize) -> Result<(), ExprError> {
        let expected = self.min_arity();
        if found < expected {
            Err(ExprError::ArityMismatch { expected, found })
        } else {
            Ok(())
        }
    }

    /// Evaluates at a point; `Ok(None)` marks a domain violation.
    pub fn eval(&self, point: &[f64]) -> Result<Option<f64>, ExprError> {
        self.check_arity(point.len())?;
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::Var(i) => Some(point[*i]),
            Expr::Unary(op, c) => apply_unary(*op, c.eval_unchecked(point)?),
            Expr::Binary(op, l, r) => {
                apply_binary(*op, l.eval_unchecked(point)?, r.eval_unchecked(point)?)
            }
        }
    }

    /// Natural interval extension over `region`; `Ok(None)` marks an
    /// interval domain violation.
    pub fn eval_interval(&self, region: &IntervalBox) -> Result<Option<Interval>, ExprError> {
        self.check_arity(region.dim())?;
        Ok(self.eval_interval_unchecked(region))
    }

    pub(crate) fn eval_interval_unchecked(&self, region: &IntervalBox) -> Option<Interval> {
        match self {
            Expr::Const(c) => Interval::checked(*c, *c),
            Expr::Var(i) => Some(region.axis(*i)),
            Expr::Unary(op, c) => interval_unary(*op, c.eval_interval_unchecked(region)?),
            Expr::Binary(op, l, r) => interval_binary(
                *op,
                l.eval_interval_unchecked(region)?,
                r.eval_interval_unchecked(region)?,
            ),
        }
    }

    /// Evaluates over column-major samples, `columns[i][row]` being input
    /// `i` of a row. Bit-identical to [`Expr::eval`] row by row; `None` if
    /// any row is invalid.
    pub fn eval_columns(&self, columns: &[Vec<f64>], rows: usize) -> Option<Vec<f64>> {
        match self {
            Expr::Const(c) => Some(vec![*c; rows]),
            Expr::Var(i) => Some(columns[*i].clone()),
            Expr::Unary(op, c) => {
                let mut v = c.eval_columns(columns, rows)?;
                for x in v.iter_mut() {
                    *x = apply_unary(*op, *x)?;
                }
                Some(v)
            }
            Expr::Binary(op, l, r) => {
                let mut a = l.eval_columns(columns, rows)?;
                let b = r.eval_columns(columns, rows)?;
                for (x, &y) in a.iter_mut().zip(&b) {
                    *x = apply_binary(*op, *x, y)?;
                }
                Some(a)
            }
        }
    }
}

impl ExprVector {
    fn check_len(&self, found: usize) -> Result<(), ExprError> {
        if found == self.arity() {
            Ok(())
        } else {
            Err(ExprError::ArityMismatch {
                expected: self.arity(),
                found,
            })
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<Option<Vec<f64>>, ExprError> {
        self.check_len(point.len())?;
        Ok(self
            .components()
            .iter()
            .map(|c| c.eval_unchecked(point))
            .collect())
    }

    /// The inclusion function: a box enclosing the image of `region`.
    pub fn eval_interval(&self, region: &IntervalBox) -> Result<Option<IntervalBox>, ExprError> {
        self.check_len(region.dim())?;
        let axes: Option<Vec<Interval>> = self
            .components()
            .iter()
            .map(|c| c.eval_interval_unchecked(region))
            .collect();
        Ok(axes.map(|a| IntervalBox::new(a).expect("models have at least one output")))
    }
}
