use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use super::operators::{grow_tree, subtree_crossover, subtree_mutation, tournament_select};
use super::{Dataset, GpConfig, GpError, Individual};
use crate::expr::{format_sexpr, Expr};

/// Attempts per slot when drawing a duplicate-free initial population.
const DEDUP_ATTEMPTS: usize = 20;

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    /// Best individual seen in any generation.
    pub best: Individual,
    /// Generations bred after the initial population.
    pub generations_used: usize,
    pub reached_target: bool,
    /// Best-so-far cost after each generation, initial population first.
    pub history: Vec<f64>,
    /// Distinct best individuals of the final population, best first.
    pub elites: Vec<Individual>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartSummary {
    pub restart_id: usize,
    pub seed: u64,
    pub cost: f64,
    pub generations_used: usize,
    pub reached_target: bool,
}

#[derive(Debug, Clone)]
pub struct MultiStartOutcome {
    pub best: Individual,
    pub restarts: Vec<RestartSummary>,
    /// Restart that produced `best`; `None` when the merged final run did.
    pub restart_id: Option<usize>,
    /// Generations bred by the merged run.
    pub final_generations: usize,
    pub generations_used: usize,
    pub reached_target: bool,
}

fn pool(workers: usize) -> Result<ThreadPool, GpError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GpError::Config(format!("cannot start {workers} workers: {e}")))
}

fn check(data: &Dataset, config: &GpConfig) -> Result<(), GpError> {
    config.validate()?;
    if data.len() < 2 {
        return Err(GpError::Dataset("need at least 2 samples".into()));
    }
    Ok(())
}

/// Runs one seeded GP population until `target_cost` or the generation budget.
pub fn evolve(data: &Dataset, config: &GpConfig) -> Result<EvolveOutcome, GpError> {
    check(data, config)?;
    let pool = pool(config.workers)?;
    Ok(evolve_from(data, config, config.seed, Vec::new(), config.population_size, &pool))
}

/// Runs `restarts` independent populations with seeds `seed + i`, then a
/// final run with seed `seed + restarts` starting from the merged elites
/// (restart order) padded with fresh trees up to `elite_merge_population`.
/// The final run stops at once if a merged elite already meets the target.
pub fn multi_start_evolve(data: &Dataset, config: &GpConfig) -> Result<MultiStartOutcome, GpError> {
    check(data, config)?;
    let pool = pool(config.workers)?;
    let mut summaries = Vec::with_capacity(config.restarts);
    let mut merged = Vec::new();
    let mut best: Option<(Individual, Option<usize>)> = None;
    let mut total = 0;

    for i in 0..config.restarts {
        let seed = config.seed.wrapping_add(i as u64);
        let run = evolve_from(data, config, seed, Vec::new(), config.population_size, &pool);
        total += run.generations_used;
        summaries.push(RestartSummary {
            restart_id: i,
            seed,
            cost: run.best.cost,
            generations_used: run.generations_used,
            reached_target: run.reached_target,
        });
        if best.as_ref().is_none_or(|(b, _)| run.best.beats(b)) {
            best = Some((run.best.clone(), Some(i)));
        }
        merged.extend(run.elites.into_iter().map(|ind| ind.expr));
    }

    let seed = config.seed.wrapping_add(config.restarts as u64);
    let size = config.elite_merge_population.max(merged.len());
    let run = evolve_from(data, config, seed, merged, size, &pool);
    total += run.generations_used;
    let (mut best, mut restart_id) = best.expect("at least one restart");
    if run.best.beats(&best) {
        best = run.best;
        restart_id = None;
    }
    Ok(MultiStartOutcome {
        reached_target: best.cost <= config.target_cost,
        best,
        restarts: summaries,
        restart_id,
        final_generations: run.generations_used,
        generations_used: total,
    })
}

fn evaluate_all(pool: &ThreadPool, exprs: Vec<Expr>, data: &Dataset) -> Vec<Individual> {
    pool.install(|| exprs.into_par_iter().map(|e| Individual::evaluate(e, data)).collect())
}

fn initial_population(
    rng: &mut ChaCha8Rng,
    config: &GpConfig,
    arity: usize,
    seeds: Vec<Expr>,
    size: usize,
) -> Vec<Expr> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(size);
    for e in seeds {
        if out.len() < size && seen.insert(format_sexpr(&e)) {
            out.push(e);
        }
    }
    let mut attempts = 0;
    while out.len() < size {
        let e = grow_tree(rng, &config.basis, config.max_depth, arity, config.const_range);
        attempts += 1;
        // Small depth caps cannot supply `size` distinct trees; accept
        // duplicates once the retry budget is spent.
        if seen.insert(format_sexpr(&e)) || attempts > DEDUP_ATTEMPTS * size {
            out.push(e);
        }
    }
    out
}

fn best_of(population: &[Individual]) -> &Individual {
    population
        .iter()
        .fold(&population[0], |best, ind| if ind.beats(best) { ind } else { best })
}

fn elites(population: &[Individual], n: usize) -> Vec<Individual> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&population[a], &population[b]);
        x.cost
            .total_cmp(&y.cost)
            .then(x.expr.node_count().cmp(&y.expr.node_count()))
            .then(a.cmp(&b))
    });
    let mut seen = HashSet::new();
    order
        .into_iter()
        .map(|i| &population[i])
        .filter(|ind| seen.insert(format_sexpr(&ind.expr)))
        .take(n)
        .cloned()
        .collect()
}

fn evolve_from(
    data: &Dataset,
    config: &GpConfig,
    seed: u64,
    seeds: Vec<Expr>,
    size: usize,
    pool: &ThreadPool,
) -> EvolveOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arity = data.arity();
    let start = initial_population(&mut rng, config, arity, seeds, size);
    let mut population = evaluate_all(pool, start, data);
    let mut best = best_of(&population).clone();
    let mut history = vec![best.cost];
    let mut generations_used = 0;

    while best.cost > config.target_cost && generations_used < config.generations {
        let mut offspring = Vec::with_capacity(size);
        offspring.push(best_of(&population).expr.clone());
        while offspring.len() < size {
            let roll: f64 = rng.random();
            if roll < config.crossover_rate {
                let a = &tournament_select(&mut rng, &population, config.tournament_size).expr;
                let b = &tournament_select(&mut rng, &population, config.tournament_size).expr;
                let (c, d) = subtree_crossover(&mut rng, a, b, config.max_depth);
                offspring.push(c);
                if offspring.len() < size {
                    offspring.push(d);
                }
            } else if roll < config.crossover_rate + config.mutation_rate {
                let a = &tournament_select(&mut rng, &population, config.tournament_size).expr;
                offspring.push(subtree_mutation(&mut rng, a, config, arity));
            } else {
                let a = tournament_select(&mut rng, &population, config.tournament_size);
                offspring.push(a.expr.clone());
            }
        }
        population = evaluate_all(pool, offspring, data);
        generations_used += 1;
        let gen_best = best_of(&population);
        if gen_best.beats(&best) {
            best = gen_best.clone();
        }
        history.push(best.cost);
    }

    EvolveOutcome {
        reached_target: best.cost <= config.target_cost,
        elites: elites(&population, config.elites_per_restart),
        best,
        generations_used,
        history,
    }
}
