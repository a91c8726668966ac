//! Sample tables: CSV ingestion, synthesis from a model, noise, decimation.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{ExprError, ExprVector};
use crate::gp::Dataset;
use crate::interval::IntervalBox;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV has no header row")]
    MissingHeader,
    #[error("row {row}: {msg}")]
    Row { row: u64, msg: String },
    #[error("invalid table: {0}")]
    Table(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("model is invalid at sample point {0:?}")]
    InvalidPoint(Vec<f64>),
}

/// How `synth` places its sample points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// `m` evenly spaced points per axis, axis 0 varying slowest.
    #[default]
    Grid,
    /// `m^n` points drawn uniformly from the box.
    Random,
}

/// A rectangular table of finite samples; the first `inputs` columns are
/// adjustments, the rest performances.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    inputs: usize,
}

impl SignalTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>, inputs: usize) -> Result<Self, DataError> {
        if inputs == 0 || inputs >= columns.len() {
            return Err(DataError::Table(format!(
                "need at least one input and one output column, got {inputs} input(s) of {}",
                columns.len()
            )));
        }
        if rows.len() < 2 {
            return Err(DataError::Table(format!("need at least 2 rows, got {}", rows.len())));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(DataError::Table(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(DataError::Table(format!("row {i} holds non-finite value {v}")));
            }
        }
        Ok(Self {
            columns,
            rows,
            inputs,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.columns.len() - self.inputs
    }

    /// Reads a headed CSV. `inputs` defaults to every column but the last.
    pub fn load_csv(path: impl AsRef<Path>, inputs: Option<usize>) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, inputs)
    }

    pub fn from_csv_str(text: &str, inputs: Option<usize>) -> Result<Self, DataError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.is_empty() || header.iter().all(str::is_empty) {
            return Err(DataError::MissingHeader);
        }
        if let Some(h) = header.iter().find(|h| h.parse::<f64>().is_ok()) {
            return Err(DataError::Table(format!(
                "header expected, found numeric column name `{h}`"
            )));
        }
        let columns: Vec<String> = header.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| DataError::Row {
                row: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let row = record
                .iter()
                .map(|cell| match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(DataError::Row {
                        row: line,
                        msg: format!("non-numeric cell `{cell}`"),
                    }),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        let inputs = inputs.unwrap_or(columns.len().saturating_sub(1));
        Self::new(columns, rows, inputs)
    }

    /// Shortest round-trip decimal printing, so `load ∘ save` is lossless.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(|v| v.to_string()))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Single-output regression data for output column `output` (0-based
    /// among the output columns).
    pub fn dataset(&self, output: usize) -> Result<Dataset, DataError> {
        if output >= self.outputs() {
            return Err(DataError::Table(format!(
                "output {output} out of range, table has {}",
                self.outputs()
            )));
        }
        let inputs = self.rows.iter().map(|r| r[..self.inputs].to_vec()).collect();
        let outputs = self.rows.iter().map(|r| r[self.inputs + output]).collect();
        Dataset::new(inputs, outputs).map_err(|e| DataError::Table(e.to_string()))
    }

    /// Keeps rows whose index is a multiple of `k`, plus the last row. Fails
    /// when fewer than two rows fall on multiples of `k`.
    pub fn decimate(&self, k: usize) -> Result<Self, DataError> {
        if k == 0 {
            return Err(DataError::Table("decimation factor must be at least 1".into()));
        }
        let last = self.rows.len() - 1;
        let kept = last / k + 1;
        if kept < 2 {
            return Err(DataError::Table(format!(
                "decimating {} rows by {k} keeps fewer than 2 rows",
                self.rows.len()
            )));
        }
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| i % k == 0 || *i == last)
            .map(|(_, r)| r.clone())
            .collect();
        Self::new(self.columns.clone(), rows, self.inputs)
    }
}

fn input_names(n: usize) -> Vec<String> {
    if n <= 3 {
        ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (0..n).map(|i| format!("x{i}")).collect()
    }
}

fn output_names(p: usize) -> Vec<String> {
    if p == 1 {
        vec!["f".into()]
    } else {
        (0..p).map(|i| format!("f{i}")).collect()
    }
}

/// Samples `model` over `region` and adds uniform noise in `[-h, h]` to
/// every output.
pub fn synth(
    model: &ExprVector,
    region: &IntervalBox,
    m: usize,
    noise_half_width: f64,
    seed: u64,
    sampling: Sampling,
) -> Result<SignalTable, DataError> {
    if m < 2 {
        return Err(DataError::Table(format!("need at least 2 points per axis, got {m}")));
    }
    if !(noise_half_width >= 0.0 && noise_half_width.is_finite()) {
        return Err(DataError::Table(format!(
            "noise half-width must be finite and >= 0, got {noise_half_width}"
        )));
    }
    let n = model.arity();
    if region.dim() != n {
        return Err(DataError::Table(format!(
            "model takes {n} input(s), sampling box has dimension {}",
            region.dim()
        )));
    }
    let total = m
        .checked_pow(n as u32)
        .ok_or_else(|| DataError::Table("sample count overflows".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = match sampling {
        Sampling::Grid => (0..total)
            .map(|flat| {
                let mut rest = flat;
                let mut point = vec![0.0; n];
                for k in (0..n).rev() {
                    let i = rest % m;
                    rest /= m;
                    let a = region.axis(k);
                    point[k] = if i == m - 1 {
                        a.hi()
                    } else {
                        a.lo() + a.width() * i as f64 / (m - 1) as f64
                    };
                }
                point
            })
            .collect(),
        Sampling::Random => (0..total)
            .map(|_| {
                region
                    .axes()
                    .iter()
                    .map(|a| a.lo() + a.width() * rng.random::<f64>())
                    .collect()
            })
            .collect(),
    };

    let mut rows = Vec::with_capacity(total);
    for point in points {
        let values = model.eval(&point)?.ok_or_else(|| DataError::InvalidPoint(point.clone()))?;
        let mut row = point;
        for v in values {
            let eps = if noise_half_width > 0.0 {
                rng.random_range(-noise_half_width..=noise_half_width)
            } else {
                0.0
            };
            row.push(v + eps);
        }
        rows.push(row);
    }
    let mut columns = input_names(n);
    columns.extend(output_names(model.outputs()));
    SignalTable::new(columns, rows, n)
}
