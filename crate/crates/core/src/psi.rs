//! Probabilistic set inversion.
//!
//! A candidate box `X` is scored by `p(X) = mes([f](X) ∩ P) / mes([f](X))`.
//! `p = 1` accepts `X`, `p = 0` rejects it, anything in between bisects `X`
//! along every axis until its volume drops below the resolution, at which
//! point it is kept as a boundary box.

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{ExprError, ExprVector};
use crate::interval::{Interval, IntervalBox, IntervalError};
use crate::paving::{BoxClass, Paving};

#[derive(Debug, Error)]
pub enum PsiError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error("invalid inversion problem: {0}")]
    Problem(String),
    #[error("invalid inversion config: {0}")]
    Config(String),
    #[error("box limit of {limit} exceeded; partial paving holds {} boxes", paving.len())]
    BoxLimit { limit: usize, paving: Box<Paving> },
}

/// `S = f⁻¹(P) ∩ R` for a model `f`, adjustment box `R` and performance box `P`.
#[derive(Debug, Clone)]
pub struct InversionProblem {
    model: ExprVector,
    adjustments: IntervalBox,
    performance: IntervalBox,
}

impl InversionProblem {
    pub fn new(
        model: ExprVector,
        adjustments: IntervalBox,
        performance: IntervalBox,
    ) -> Result<Self, PsiError> {
        if model.arity() != adjustments.dim() {
            return Err(PsiError::Problem(format!(
                "model takes {} input(s) but R has dimension {}",
                model.arity(),
                adjustments.dim()
            )));
        }
        if model.outputs() != performance.dim() {
            return Err(PsiError::Problem(format!(
                "model has {} output(s) but P has dimension {}",
                model.outputs(),
                performance.dim()
            )));
        }
        if !(adjustments.volume() > 0.0) {
            return Err(PsiError::Problem("R must have positive volume".into()));
        }
        Ok(Self {
            model,
            adjustments,
            performance,
        })
    }

    pub fn model(&self) -> &ExprVector {
        &self.model
    }

    pub fn adjustments(&self) -> &IntervalBox {
        &self.adjustments
    }

    pub fn performance(&self) -> &IntervalBox {
        &self.performance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiConfig {
    /// Volume threshold.
    pub resolution: f64,
    /// Cap on classified boxes per worker.
    pub max_boxes: usize,
    pub workers: usize,
}

impl Default for PsiConfig {
    fn default() -> Self {
        Self {
            resolution: 1e-3,
            max_boxes: 50_000_000,
            workers: 1,
        }
    }
}

impl PsiConfig {
    /// Converts a per-axis width into the volume threshold `width^dim`.
    pub fn with_width(width: f64, dim: usize) -> Self {
        Self {
            resolution: width.powi(dim as i32),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PsiError> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(PsiError::Config(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.max_boxes == 0 {
            return Err(PsiError::Config("max_boxes must be positive".into()));
        }
        if self.workers == 0 {
            return Err(PsiError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
    Bisect,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    /// `None` when the interval image is invalid.
    pub probability: Option<f64>,
}

/// Returned for a zero-volume image that neither lies in `P` nor misses it.
pub const DEGENERATE_PROBABILITY: f64 = 0.5;

/// `mes([f](X) ∩ P) / mes([f](X))`, or `None` if `[f](X)` is invalid.
///
/// Exactly 1 iff the image lies in `P`, exactly 0 iff the intersection has
/// zero measure. Other ratios are kept strictly inside `(0, 1)` so rounding
/// never turns an undecided box into a decided one.
pub fn probability(problem: &InversionProblem, x: &IntervalBox) -> Result<Option<f64>, PsiError> {
    let Some(image) = problem.model.eval_interval(x)? else {
        return Ok(None);
    };
    let p = &problem.performance;
    if image.is_subset_of(p)? {
        return Ok(Some(1.0));
    }
    let Some(meet) = image.intersect(p)? else {
        return Ok(Some(0.0));
    };
    if image.is_degenerate() {
        return Ok(Some(DEGENERATE_PROBABILITY));
    }
    if meet.is_degenerate() {
        return Ok(Some(0.0));
    }
    let ratio: f64 = meet
        .axes()
        .iter()
        .zip(image.axes())
        .map(|(i, y)| i.width() / y.width())
        .product();
    Ok(Some(ratio.clamp(f64::MIN_POSITIVE, 1.0f64.next_down())))
}

pub fn classify(
    problem: &InversionProblem,
    config: &PsiConfig,
    x: &IntervalBox,
) -> Result<Classification, PsiError> {
    let probability = probability(problem, x)?;
    let verdict = match probability {
        Some(p) if p == 1.0 => Verdict::Accept,
        Some(p) if p == 0.0 => Verdict::Reject,
        _ if x.volume() >= config.resolution && !x.is_degenerate() => Verdict::Bisect,
        _ => Verdict::Boundary,
    };
    Ok(Classification {
        verdict,
        probability,
    })
}

/// Runs the inversion on a single thread.
pub fn invert(problem: &InversionProblem, config: &PsiConfig) -> Result<Paving, PsiError> {
    config.validate()?;
    invert_within(problem, config, None)
}

/// Splits `R` into `config.workers` equal slabs along axis 0 and inverts
/// each on its own thread, concatenating the pavings in slab order.
///
/// Every worker walks the same bisection tree rooted at `R`, pruning the
/// branches outside its slab and clipping emitted boxes to it, so the
/// per-point classification is identical for any worker count.
pub fn invert_decomposed(problem: &InversionProblem, config: &PsiConfig) -> Result<Paving, PsiError> {
    config.validate()?;
    if config.workers == 1 {
        return invert_within(problem, config, None);
    }
    let slabs = slabs(problem.adjustments.axis(0), config.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PsiError::Config(format!("cannot start workers: {e}")))?;
    let results: Vec<Result<Paving, PsiError>> = pool.install(|| {
        slabs
            .par_iter()
            .map(|slab| invert_within(problem, config, Some(*slab)))
            .collect()
    });

    let mut merged = empty_paving(problem, config);
    let mut limit_hit = None;
    for result in results {
        match result {
            Ok(p) => merged.extend(p),
            Err(PsiError::BoxLimit { limit, paving }) => {
                merged.extend(*paving);
                limit_hit = Some(limit);
            }
            Err(e) => return Err(e),
        }
    }
    match limit_hit {
        Some(limit) => Err(PsiError::BoxLimit {
            limit,
            paving: Box::new(merged),
        }),
        None => Ok(merged),
    }
}

fn slabs(axis: Interval, workers: usize) -> Result<Vec<Interval>, PsiError> {
    let edge = |i: usize| {
        if i == workers {
            axis.hi()
        } else {
            axis.lo() + axis.width() * i as f64 / workers as f64
        }
    };
    (0..workers)
        .map(|i| Interval::new(edge(i), edge(i + 1)).map_err(PsiError::from))
        .collect()
}

fn empty_paving(problem: &InversionProblem, config: &PsiConfig) -> Paving {
    Paving::new(
        config.resolution,
        problem.model.to_sexpr(),
        problem.adjustments.clone(),
        problem.performance.clone(),
    )
}

fn overlaps(a: Interval, slab: Interval) -> bool {
    a.hi().min(slab.hi()) > a.lo().max(slab.lo())
}

fn invert_within(
    problem: &InversionProblem,
    config: &PsiConfig,
    slab: Option<Interval>,
) -> Result<Paving, PsiError> {
    let mut paving = empty_paving(problem, config);
    let emit = |paving: &mut Paving, class: BoxClass, x: IntervalBox| {
        let x = match slab.and_then(|s| x.axis(0).intersect(&s)) {
            Some(clipped) if clipped != x.axis(0) => x.with_axis(0, clipped),
            _ => x,
        };
        paving.push(class, x);
    };

    let mut stack = vec![problem.adjustments.clone()];
    let mut processed = 0usize;
    while let Some(x) = stack.pop() {
        processed += 1;
        if processed > config.max_boxes {
            return Err(PsiError::BoxLimit {
                limit: config.max_boxes,
                paving: Box::new(paving),
            });
        }
        match classify(problem, config, &x)?.verdict {
            Verdict::Accept => emit(&mut paving, BoxClass::Accepted, x),
            Verdict::Reject => emit(&mut paving, BoxClass::Rejected, x),
            Verdict::Boundary => emit(&mut paving, BoxClass::Boundary, x),
            Verdict::Bisect => {
                let children = x.bisect_all()?;
                if children.len() == 1 {
                    emit(&mut paving, BoxClass::Boundary, x);
                    continue;
                }
                stack.extend(
                    children
                        .into_iter()
                        .rev()
                        .filter(|c| slab.is_none_or(|s| overlaps(c.axis(0), s))),
                );
            }
        }
    }
    Ok(paving)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(bounds: &[(f64, f64)]) -> IntervalBox {
        IntervalBox::from_bounds(bounds).unwrap()
    }

    fn identity(r: (f64, f64), p: (f64, f64)) -> InversionProblem {
        InversionProblem::new(ExprVector::parse("x", 1).unwrap(), bx(&[r]), bx(&[p])).unwrap()
    }

    #[test]
    fn problem_validation() {
        let m = ExprVector::parse("x y", 2).unwrap();
        let r2 = bx(&[(0.0, 1.0), (0.0, 1.0)]);
        assert!(InversionProblem::new(m.clone(), r2.clone(), r2.clone()).is_ok());
        assert!(InversionProblem::new(m.clone(), bx(&[(0.0, 1.0)]), r2.clone()).is_err());
        assert!(InversionProblem::new(m.clone(), r2.clone(), bx(&[(0.0, 1.0)])).is_err());
        let flat = bx(&[(0.0, 1.0), (1.0, 1.0)]);
        assert!(InversionProblem::new(m, flat, r2).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(PsiConfig::default().validate().is_ok());
        let bad = PsiConfig { resolution: 0.0, ..PsiConfig::default() };
        assert!(bad.validate().is_err());
        let bad = PsiConfig { workers: 0, ..PsiConfig::default() };
        assert!(bad.validate().is_err());
        assert_eq!(PsiConfig::with_width(0.1, 2).resolution, 0.1f64.powi(2));
    }

    #[test]
    fn probability_examples() {
        // Y = [0,1] against P = [0.5,2]
        let pr = identity((0.0, 1.0), (0.5, 2.0));
        assert_eq!(probability(&pr, &bx(&[(0.0, 1.0)])).unwrap(), Some(0.5));
        let pr = identity((0.0, 1.0), (-1.0, 2.0));
        assert_eq!(probability(&pr, &bx(&[(0.0, 1.0)])).unwrap(), Some(1.0));
        let pr = identity((0.0, 1.0), (3.0, 4.0));
        assert_eq!(probability(&pr, &bx(&[(0.0, 1.0)])).unwrap(), Some(0.0));
        // Touching faces have zero measure.
        let pr = identity((0.0, 1.0), (1.0, 4.0));
        assert_eq!(probability(&pr, &bx(&[(0.0, 1.0)])).unwrap(), Some(0.0));
    }

    #[test]
    fn probability_of_invalid_and_degenerate_images() {
        let m = ExprVector::parse("(log x)", 1).unwrap();
        let pr = InversionProblem::new(m, bx(&[(-1.0, 1.0)]), bx(&[(0.0, 1.0)])).unwrap();
        assert_eq!(probability(&pr, &bx(&[(-1.0, 1.0)])).unwrap(), None);

        let m = ExprVector::parse("x 2", 1).unwrap();
        let pr = InversionProblem::new(m, bx(&[(0.0, 1.0)]), bx(&[(0.5, 2.0), (0.0, 3.0)])).unwrap();
        assert_eq!(probability(&pr, &bx(&[(0.0, 1.0)])).unwrap(), Some(DEGENERATE_PROBABILITY));
        assert_eq!(probability(&pr, &bx(&[(0.6, 1.0)])).unwrap(), Some(1.0));
        assert_eq!(probability(&pr, &bx(&[(0.0, 0.25)])).unwrap(), Some(0.0));
    }

    #[test]
    fn tiny_overlap_never_rounds_to_accept() {
        let pr = identity((0.0, 1e20), (1e-19, 2e20));
        let p = probability(&pr, &bx(&[(0.0, 1e20)])).unwrap().unwrap();
        assert!(p < 1.0 && p > 0.0);
    }

    #[test]
    fn classification_rules() {
        let cfg = PsiConfig { resolution: 0.1, ..PsiConfig::default() };
        let pr = identity((0.0, 1.0), (0.0, 0.3));
        let verdict = |lo, hi| classify(&pr, &cfg, &bx(&[(lo, hi)])).unwrap().verdict;
        assert_eq!(verdict(0.0, 0.2), Verdict::Accept);
        assert_eq!(verdict(0.5, 1.0), Verdict::Reject);
        assert_eq!(verdict(0.0, 1.0), Verdict::Bisect);
        // p = 0.3 at half the resolution
        let c = classify(&pr, &cfg, &bx(&[(0.285, 0.335)])).unwrap();
        assert_eq!(c.verdict, Verdict::Boundary);
        assert!((c.probability.unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn invalid_image_is_bisected_then_boundary() {
        let m = ExprVector::parse("(/ 1 x)", 1).unwrap();
        let pr = InversionProblem::new(m, bx(&[(-1.0, 1.0)]), bx(&[(-100.0, 100.0)])).unwrap();
        let cfg = PsiConfig { resolution: 0.5, ..PsiConfig::default() };
        assert_eq!(classify(&pr, &cfg, &bx(&[(-1.0, 1.0)])).unwrap().verdict, Verdict::Bisect);
        assert_eq!(classify(&pr, &cfg, &bx(&[(-0.1, 0.1)])).unwrap().verdict, Verdict::Boundary);
        let paving = invert(&pr, &cfg).unwrap();
        paving.check_invariants().unwrap();
        assert!(paving.accepted.iter().all(|b| !b.axis(0).contains(0.0)));
    }

    #[test]
    fn identity_on_its_own_range_is_one_box() {
        let pr = identity((0.0, 1.0), (0.0, 1.0));
        let paving = invert(&pr, &PsiConfig::default()).unwrap();
        assert_eq!(paving.accepted, vec![bx(&[(0.0, 1.0)])]);
        assert!(paving.rejected.is_empty() && paving.boundary.is_empty());
    }

    #[test]
    fn identity_half_inside() {
        let pr = identity((0.0, 2.0), (0.0, 1.0));
        let cfg = PsiConfig { resolution: 1e-3, ..PsiConfig::default() };
        let paving = invert(&pr, &cfg).unwrap();
        paving.check_invariants().unwrap();
        let idx = paving.index();
        for k in 0..=10_000 {
            let x = 2.0 * k as f64 / 10_000.0;
            let m = idx.membership(&[x]);
            assert!(m.covered());
            if x < 1.0 {
                assert!(!m.rejected, "{x}");
            } else if x > 1.0 {
                assert!(!m.accepted, "{x}");
            }
        }
        assert!(paving.volume(BoxClass::Boundary) <= 2.0 * cfg.resolution);
    }

    #[test]
    fn box_limit_returns_partial_paving() {
        let m = ExprVector::parse("(sin (* 40 x))", 1).unwrap();
        let pr = InversionProblem::new(m, bx(&[(0.0, 10.0)]), bx(&[(0.0, 0.5)])).unwrap();
        let cfg = PsiConfig { resolution: 1e-6, max_boxes: 100, workers: 1 };
        match invert(&pr, &cfg) {
            Err(PsiError::BoxLimit { limit, paving }) => {
                assert_eq!(limit, 100);
                assert!(paving.len() <= 100);
            }
            other => panic!("expected box limit, got {other:?}"),
        }
    }

    #[test]
    fn slab_edges() {
        let s = slabs(Interval::new(-5.0, 5.0).unwrap(), 4).unwrap();
        let edges: Vec<(f64, f64)> = s.iter().map(|i| (i.lo(), i.hi())).collect();
        assert_eq!(edges, vec![(-5.0, -2.5), (-2.5, 0.0), (0.0, 2.5), (2.5, 5.0)]);
        let s = slabs(Interval::new(0.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(s.last().unwrap().hi(), 1.0);
    }

    #[test]
    fn single_worker_decomposition_is_plain_inversion() {
        let pr = identity((0.0, 2.0), (0.0, 1.0));
        let cfg = PsiConfig { resolution: 1e-3, ..PsiConfig::default() };
        assert_eq!(invert(&pr, &cfg).unwrap(), invert_decomposed(&pr, &cfg).unwrap());
    }

    #[test]
    fn two_slabs_of_the_identity() {
        let pr = identity((0.0, 2.0), (0.0, 1.0));
        let cfg = PsiConfig { resolution: 1e-3, workers: 2, ..PsiConfig::default() };
        let paving = invert_decomposed(&pr, &cfg).unwrap();
        paving.check_invariants().unwrap();
        assert_eq!(paving.volume(BoxClass::Accepted), 1.0);
        assert!(paving.accepted.iter().all(|b| b.axis(0).hi() <= 1.0));
        assert!(paving.rejected.iter().all(|b| b.axis(0).lo() >= 1.0));
    }

    #[test]
    fn odd_worker_counts_keep_point_membership() {
        let m = ExprVector::parse("(- (* x x) y) (+ x y)", 2).unwrap();
        let r = bx(&[(-2.0, 2.0), (-2.0, 2.0)]);
        let pr = InversionProblem::new(m, r, bx(&[(-1.0, 1.0), (-1.5, 1.5)])).unwrap();
        let base = PsiConfig { resolution: 1e-3, ..PsiConfig::default() };
        let single = invert(&pr, &base).unwrap();
        let triple = invert_decomposed(&pr, &PsiConfig { workers: 3, ..base }).unwrap();
        triple.check_invariants().unwrap();
        let (a, b) = (single.index(), triple.index());
        for i in 0..97 {
            for j in 0..97 {
                let pt = [-2.0 + 4.0 * i as f64 / 96.0, -2.0 + 4.0 * j as f64 / 96.0];
                assert_eq!(a.membership(&pt), b.membership(&pt), "{pt:?}");
            }
        }
    }
}
