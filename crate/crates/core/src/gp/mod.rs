//! Symbolic regression by genetic programming.
//!
//! Candidate models are expression trees grown over a function basis and
//! scored by mean squared error against a [`Dataset`]. [`evolve`] runs one
//! seeded population; [`multi_start_evolve`] runs several seeds and then a
//! larger final run seeded with each run's elites.

mod evolve;
mod operators;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, Op};

pub use evolve::{evolve, multi_start_evolve, EvolveOutcome, MultiStartOutcome, RestartSummary};
pub use operators::{grow_tree, subtree_crossover, subtree_mutation, tournament_select};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid GP config: {0}")]
    Config(String),
}

/// Regression samples `(inputs[i], outputs[i])`, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self, GpError> {
        if inputs.len() != outputs.len() {
            return Err(GpError::Dataset(format!(
                "{} input rows but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.len() < 2 {
            return Err(GpError::Dataset(format!(
                "need at least 2 samples, got {}",
                inputs.len()
            )));
        }
        let arity = inputs[0].len();
        if arity == 0 {
            return Err(GpError::Dataset("samples need at least one input".into()));
        }
        if inputs.iter().any(|r| r.len() != arity) {
            return Err(GpError::Dataset("ragged input rows".into()));
        }
        if inputs.iter().flatten().chain(&outputs).any(|v| !v.is_finite()) {
            return Err(GpError::Dataset("non-finite sample value".into()));
        }
        let columns = (0..arity)
            .map(|k| inputs.iter().map(|r| r[k]).collect())
            .collect();
        Ok(Self { columns, outputs })
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }
}

/// Mean squared error of `e` on `data`; `+∞` if any sample is invalid.
pub fn cost(e: &Expr, data: &Dataset) -> f64 {
    if e.min_arity() > data.arity() {
        return f64::INFINITY;
    }
    let Some(pred) = e.eval_columns(&data.columns, data.len()) else {
        return f64::INFINITY;
    };
    let sse: f64 = pred
        .iter()
        .zip(&data.outputs)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    let mse = sse / data.len() as f64;
    if mse.is_finite() {
        mse
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub expr: Expr,
    pub cost: f64,
}

impl Individual {
    pub fn evaluate(expr: Expr, data: &Dataset) -> Self {
        let cost = cost(&expr, data);
        Self { expr, cost }
    }

    /// Lower cost wins, then fewer nodes.
    pub fn beats(&self, other: &Individual) -> bool {
        match self.cost.partial_cmp(&other.cost) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Equal) => self.expr.node_count() < other.expr.node_count(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub population_size: usize,
    pub max_depth: usize,
    /// Operator symbols, e.g. `["+", "-", "*", "/", "exp"]`.
    #[serde(with = "basis_serde")]
    pub basis: Vec<Op>,
    pub generations: usize,
    pub target_cost: f64,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub reproduction_rate: f64,
    pub const_range: (f64, f64),
    pub seed: u64,
    pub restarts: usize,
    pub elites_per_restart: usize,
    pub elite_merge_population: usize,
    /// Threads for fitness evaluation and concurrent restarts.
    pub workers: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population_size: 1000,
            max_depth: 5,
            basis: Op::full_basis(),
            generations: 200,
            target_cost: 1e-3,
            tournament_size: 7,
            crossover_rate: 0.8,
            mutation_rate: 0.15,
            reproduction_rate: 0.05,
            const_range: (-5.0, 5.0),
            seed: 0,
            restarts: 8,
            elites_per_restart: 10,
            elite_merge_population: 2000,
            workers: 1,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        let fail = |msg: String| Err(GpError::Config(msg));
        if self.max_depth < 1 {
            return fail("max_depth must be >= 1".into());
        }
        if self.population_size < 2 {
            return fail(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if !(self.target_cost > 0.0) {
            return fail(format!("target_cost must be > 0, got {}", self.target_cost));
        }
        if self.tournament_size < 1 || self.tournament_size > self.population_size {
            return fail(format!(
                "tournament_size must be in 1..={}, got {}",
                self.population_size, self.tournament_size
            ));
        }
        let rates = [self.crossover_rate, self.mutation_rate, self.reproduction_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return fail(format!("rates must lie in [0, 1], got {rates:?}"));
        }
        if (rates.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return fail(format!("rates must sum to 1, got {rates:?}"));
        }
        let (lo, hi) = self.const_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return fail(format!("const_range must be a finite interval, got [{lo}, {hi}]"));
        }
        if self.restarts < 1 {
            return fail("restarts must be >= 1".into());
        }
        if self.elites_per_restart < 1 {
            return fail("elites_per_restart must be >= 1".into());
        }
        if self.elite_merge_population < 2 {
            return fail("elite_merge_population must be >= 2".into());
        }
        if self.workers < 1 {
            return fail("workers must be >= 1".into());
        }
        Ok(())
    }
}

mod basis_serde {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::expr::Op;

    pub fn serialize<S: Serializer>(basis: &[Op], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(basis.iter().map(|op| op.symbol()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Op>, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names
            .iter()
            .map(|n| n.parse::<Op>().map_err(D::Error::custom))
            .collect()
    }
}
