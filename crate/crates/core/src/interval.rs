//! Closed intervals and axis-aligned boxes.
//!
//! Every interval is finite with `lo <= hi`. Boxes are products of
//! intervals and carry the Lebesgue measure used by the inverter.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo <= hi")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("box must have at least one axis")]
    EmptyBox,
    #[error("cannot bisect a box with zero volume")]
    ZeroVolume,
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(IntervalError::InvalidBounds { lo, hi })
        }
    }

    /// Builds an interval from bounds already known to be finite and ordered,
    /// returning `None` otherwise. Used by the evaluators where an overflow
    /// simply marks the result invalid.
    pub(crate) fn checked(lo: f64, hi: f64) -> Option<Self> {
        Self::new(lo, hi).ok()
    }

    pub fn point(v: f64) -> Result<Self, IntervalError> {
        Self::new(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interior(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// `[max lo, min hi]`, or `None` when the intervals are disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Splits at the midpoint. Returns `None` when rounding would leave one
    /// half with zero width.
    pub fn bisect(&self) -> Option<(Interval, Interval)> {
        let mid = self.midpoint();
        if mid <= self.lo || mid >= self.hi {
            return None;
        }
        Some((
            Interval { lo: self.lo, hi: mid },
            Interval { lo: mid, hi: self.hi },
        ))
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = IntervalError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// An axis-aligned box, the product of one interval per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalBox {
    axes: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(axes: Vec<Interval>) -> Result<Self, IntervalError> {
        if axes.is_empty() {
            return Err(IntervalError::EmptyBox);
        }
        Ok(Self { axes })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self, IntervalError> {
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> Interval {
        self.axes[k]
    }

    /// Product of the axis widths.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Interval::width).product()
    }

    pub fn is_degenerate(&self) -> bool {
        self.axes.iter().any(|a| a.width() == 0.0)
    }

    fn check_dim(&self, other: &IntervalBox) -> Result<(), IntervalError> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(IntervalError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        }
    }

    /// Component-wise intersection; `Ok(None)` is the empty box.
    pub fn intersect(&self, other: &IntervalBox) -> Result<Option<IntervalBox>, IntervalError> {
        self.check_dim(other)?;
        let axes: Option<Vec<Interval>> = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| a.intersect(b))
            .collect();
        Ok(axes.map(|axes| IntervalBox { axes }))
    }

    pub fn is_subset_of(&self, other: &IntervalBox) -> Result<bool, IntervalError> {
        self.check_dim(other)?;
        Ok(self.axes.iter().zip(&other.axes).all(|(a, b)| a.is_subset_of(b)))
    }

    pub fn contains_point(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && self.axes.iter().zip(point).all(|(a, &v)| a.contains(v))
    }

    /// True when the point lies strictly inside on every axis.
    pub fn contains_point_interior(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && self.axes.iter().zip(point).all(|(a, &v)| a.contains_interior(v))
    }

    /// Splits every axis at its midpoint. Children are ordered by binary
    /// counting with axis 0 as the most significant digit (0 = lower half).
    /// An axis whose midpoint rounds onto an endpoint is left whole, so the
    /// result may hold fewer than `2^d` boxes.
    pub fn bisect_all(&self) -> Result<Vec<IntervalBox>, IntervalError> {
        if self.is_degenerate() {
            return Err(IntervalError::ZeroVolume);
        }
        let mut children = vec![IntervalBox { axes: Vec::with_capacity(self.dim()) }];
        for axis in &self.axes {
            children = match axis.bisect() {
                Some((lower, upper)) => children
                    .into_iter()
                    .flat_map(|c| {
                        let mut a = c.clone();
                        a.axes.push(lower);
                        let mut b = c;
                        b.axes.push(upper);
                        [a, b]
                    })
                    .collect(),
                None => children
                    .into_iter()
                    .map(|mut c| {
                        c.axes.push(*axis);
                        c
                    })
                    .collect(),
            };
        }
        Ok(children)
    }

    /// Replaces one axis, keeping the others.
    pub fn with_axis(&self, k: usize, interval: Interval) -> IntervalBox {
        let mut axes = self.axes.clone();
        axes[k] = interval;
        IntervalBox { axes }
    }
}

impl TryFrom<Vec<Interval>> for IntervalBox {
    type Error = IntervalError;

    fn try_from(axes: Vec<Interval>) -> Result<Self, Self::Error> {
        IntervalBox::new(axes)
    }
}

impl From<IntervalBox> for Vec<Interval> {
    fn from(b: IntervalBox) -> Self {
        b.axes
    }
}

impl fmt::Display for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.axes.iter().enumerate() {
            if k > 0 {
                f.write_str("×")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
