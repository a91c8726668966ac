//! Result of a set inversion: the adjustment box partitioned into accepted,
//! rejected and boundary boxes, plus JSON/CSV exchange and point lookup.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::IntervalBox;

/// Relative tolerance of the volume-accounting tiling check.
pub const TILING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PavingError {
    #[error("paving JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("paving I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("paving invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxClass {
    Accepted,
    Rejected,
    Boundary,
}

impl BoxClass {
    pub const ALL: [BoxClass; 3] = [BoxClass::Accepted, BoxClass::Rejected, BoxClass::Boundary];

    pub fn name(self) -> &'static str {
        match self {
            BoxClass::Accepted => "accepted",
            BoxClass::Rejected => "rejected",
            BoxClass::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paving {
    /// Volume threshold below which undecided boxes become boundary boxes.
    pub resolution: f64,
    /// Model text in S-expression form.
    pub model: String,
    #[serde(rename = "R")]
    pub adjustments: IntervalBox,
    #[serde(rename = "P")]
    pub performance: IntervalBox,
    pub accepted: Vec<IntervalBox>,
    pub rejected: Vec<IntervalBox>,
    pub boundary: Vec<IntervalBox>,
}

impl Paving {
    pub fn new(
        resolution: f64,
        model: String,
        adjustments: IntervalBox,
        performance: IntervalBox,
    ) -> Self {
        Self {
            resolution,
            model,
            adjustments,
            performance,
            accepted: Vec::new(),
            rejected: Vec::new(),
            boundary: Vec::new(),
        }
    }

    pub fn boxes(&self, class: BoxClass) -> &[IntervalBox] {
        match class {
            BoxClass::Accepted => &self.accepted,
            BoxClass::Rejected => &self.rejected,
            BoxClass::Boundary => &self.boundary,
        }
    }

    pub fn push(&mut self, class: BoxClass, b: IntervalBox) {
        match class {
            BoxClass::Accepted => self.accepted.push(b),
            BoxClass::Rejected => self.rejected.push(b),
            BoxClass::Boundary => self.boundary.push(b),
        }
    }

    /// Appends another paving's boxes, keeping their order.
    pub fn extend(&mut self, other: Paving) {
        self.accepted.extend(other.accepted);
        self.rejected.extend(other.rejected);
        self.boundary.extend(other.boundary);
    }

    pub fn iter(&self) -> impl Iterator<Item = (BoxClass, &IntervalBox)> {
        BoxClass::ALL
            .into_iter()
            .flat_map(move |c| self.boxes(c).iter().map(move |b| (c, b)))
    }

    pub fn len(&self) -> usize {
        self.accepted.len() + self.rejected.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self, class: BoxClass) -> f64 {
        self.boxes(class).iter().map(IntervalBox::volume).sum()
    }

    /// Checks the tiling by volume accounting, the boundary resolution bound
    /// and that every box lies in the adjustment box.
    pub fn check_invariants(&self) -> Result<(), PavingError> {
        let dim = self.adjustments.dim();
        for (class, b) in self.iter() {
            if b.dim() != dim || !b.is_subset_of(&self.adjustments).unwrap_or(false) {
                return Err(PavingError::Invariant(format!(
                    "{} box {b} is not inside R",
                    class.name()
                )));
            }
        }
        if let Some(b) = self.boundary.iter().find(|b| b.volume() >= self.resolution) {
            return Err(PavingError::Invariant(format!(
                "boundary box {b} has volume {} >= resolution {}",
                b.volume(),
                self.resolution
            )));
        }
        let total: f64 = BoxClass::ALL.iter().map(|&c| self.volume(c)).sum();
        let expected = self.adjustments.volume();
        if (total - expected).abs() > TILING_TOLERANCE * expected {
            return Err(PavingError::Invariant(format!(
                "boxes cover volume {total}, R has volume {expected}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pavings serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, PavingError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, PavingError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One box per row: `lo0,hi0,…,class`.
    pub fn to_csv(&self) -> String {
        let dim = self.adjustments.dim();
        let mut out = String::new();
        for k in 0..dim {
            let _ = write!(out, "lo{k},hi{k},");
        }
        out.push_str("class\n");
        for (class, b) in self.iter() {
            for a in b.axes() {
                let _ = write!(out, "{},{},", a.lo(), a.hi());
            }
            out.push_str(class.name());
            out.push('\n');
        }
        out
    }

    pub fn index(&self) -> PavingIndex<'_> {
        PavingIndex::new(self)
    }
}

/// Which classes of box contain a point. Points on shared faces may lie in
/// several boxes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Membership {
    pub accepted: bool,
    pub rejected: bool,
    pub boundary: bool,
}

impl Membership {
    pub fn covered(&self) -> bool {
        self.accepted || self.rejected || self.boundary
    }

    fn mark(&mut self, class: BoxClass) {
        match class {
            BoxClass::Accepted => self.accepted = true,
            BoxClass::Rejected => self.rejected = true,
            BoxClass::Boundary => self.boundary = true,
        }
    }
}

/// Uniform-grid bucket index for point membership queries.
pub struct PavingIndex<'a> {
    paving: &'a Paving,
    cells: Vec<usize>,
    buckets: Vec<Vec<(BoxClass, u32)>>,
}

impl<'a> PavingIndex<'a> {
    fn new(paving: &'a Paving) -> Self {
        let dim = paving.adjustments.dim();
        let n = paving.len().max(1) as f64;
        let per_axis = (n.powf(1.0 / dim as f64).ceil() as usize).clamp(1, 1 << 12);
        let cells: Vec<usize> = paving
            .adjustments
            .axes()
            .iter()
            .map(|a| if a.width() > 0.0 { per_axis } else { 1 })
            .collect();
        let total: usize = cells.iter().product();
        let mut index = Self {
            paving,
            cells,
            buckets: vec![Vec::new(); total],
        };
        for class in BoxClass::ALL {
            for (i, b) in paving.boxes(class).iter().enumerate() {
                let ranges: Vec<(usize, usize)> = (0..dim)
                    .map(|k| (index.cell(k, b.axis(k).lo()), index.cell(k, b.axis(k).hi())))
                    .collect();
                index.for_each_cell(&ranges, |bucket| bucket.push((class, i as u32)));
            }
        }
        index
    }

    fn cell(&self, axis: usize, v: f64) -> usize {
        let a = self.paving.adjustments.axis(axis);
        let n = self.cells[axis];
        if a.width() == 0.0 {
            return 0;
        }
        let t = ((v - a.lo()) / a.width() * n as f64).floor();
        (t.max(0.0) as usize).min(n - 1)
    }

    fn flat(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.cells)
            .fold(0, |acc, (&c, &n)| acc * n + c)
    }

    fn for_each_cell(&mut self, ranges: &[(usize, usize)], mut f: impl FnMut(&mut Vec<(BoxClass, u32)>)) {
        let mut coords: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let flat = self.flat(&coords);
            f(&mut self.buckets[flat]);
            let mut k = coords.len();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if coords[k] < ranges[k].1 {
                    coords[k] += 1;
                    break;
                }
                coords[k] = ranges[k].0;
            }
        }
    }

    /// Classes of every closed box containing `point`.
    pub fn membership(&self, point: &[f64]) -> Membership {
        let mut m = Membership::default();
        if !self.paving.adjustments.contains_point(point) {
            return m;
        }
        let coords: Vec<usize> = point.iter().enumerate().map(|(k, &v)| self.cell(k, v)).collect();
        for &(class, i) in &self.buckets[self.flat(&coords)] {
            if self.paving.boxes(class)[i as usize].contains_point(point) {
                m.mark(class);
            }
        }
        m
    }
}
