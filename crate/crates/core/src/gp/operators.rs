use rand::Rng;

use super::{GpConfig, Individual};
use crate::expr::{Expr, Op};

/// Chance of placing an operator (rather than a terminal) above the depth cap.
const OPERATOR_PROBABILITY: f64 = 0.7;
const VARIABLE_PROBABILITY: f64 = 0.5;
const INTEGER_CONSTANT_PROBABILITY: f64 = 0.5;
const INTEGER_CONSTANTS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

fn terminal<R: Rng + ?Sized>(rng: &mut R, arity: usize, const_range: (f64, f64)) -> Expr {
    if arity > 0 && rng.random_bool(VARIABLE_PROBABILITY) {
        return Expr::Var(rng.random_range(0..arity));
    }
    if rng.random_bool(INTEGER_CONSTANT_PROBABILITY) {
        Expr::Const(INTEGER_CONSTANTS[rng.random_range(0..INTEGER_CONSTANTS.len())])
    } else {
        let (lo, hi) = const_range;
        Expr::Const(if lo < hi { rng.random_range(lo..hi) } else { lo })
    }
}

/// Grow initialisation: above the depth cap each node is an operator with
/// probability 0.7, otherwise a terminal; at the cap only terminals.
pub fn grow_tree<R: Rng + ?Sized>(
    rng: &mut R,
    basis: &[Op],
    max_depth: usize,
    arity: usize,
    const_range: (f64, f64),
) -> Expr {
    if max_depth <= 1 || basis.is_empty() || !rng.random_bool(OPERATOR_PROBABILITY) {
        return terminal(rng, arity, const_range);
    }
    match basis[rng.random_range(0..basis.len())] {
        Op::Unary(op) => Expr::unary(op, grow_tree(rng, basis, max_depth - 1, arity, const_range)),
        Op::Binary(op) => {
            let left = grow_tree(rng, basis, max_depth - 1, arity, const_range);
            let right = grow_tree(rng, basis, max_depth - 1, arity, const_range);
            Expr::binary(op, left, right)
        }
    }
}

/// Best of `k` uniform draws with replacement: lowest cost, then fewest
/// nodes, then earliest draw.
pub fn tournament_select<'a, R: Rng + ?Sized>(
    rng: &mut R,
    population: &'a [Individual],
    k: usize,
) -> &'a Individual {
    let mut best = &population[rng.random_range(0..population.len())];
    for _ in 1..k {
        let challenger = &population[rng.random_range(0..population.len())];
        if challenger.beats(best) {
            best = challenger;
        }
    }
    best
}

/// Swaps uniformly chosen subtrees. An offspring deeper than `max_depth` is
/// replaced by its own parent.
pub fn subtree_crossover<R: Rng + ?Sized>(
    rng: &mut R,
    a: &Expr,
    b: &Expr,
    max_depth: usize,
) -> (Expr, Expr) {
    let i = rng.random_range(0..a.node_count());
    let j = rng.random_range(0..b.node_count());
    let sa = a.subtree(i).expect("index below node count");
    let sb = b.subtree(j).expect("index below node count");
    let mut ca = a.replace_subtree(i, sb);
    let mut cb = b.replace_subtree(j, sa);
    if ca.depth() > max_depth {
        ca = a.clone();
    }
    if cb.depth() > max_depth {
        cb = b.clone();
    }
    (ca, cb)
}

/// Replaces a uniformly chosen node with a fresh grown subtree that fits
/// under the depth cap.
pub fn subtree_mutation<R: Rng + ?Sized>(
    rng: &mut R,
    a: &Expr,
    config: &GpConfig,
    arity: usize,
) -> Expr {
    let i = rng.random_range(0..a.node_count());
    let level = a.node_level(i).expect("index below node count");
    let room = config.max_depth.saturating_sub(level).max(1);
    let fresh = grow_tree(rng, &config.basis, room, arity, config.const_range);
    a.replace_subtree(i, &fresh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{format_sexpr, parse_sexpr, BinaryOp};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn basis() -> Vec<Op> {
        Op::full_basis()
    }

    #[test]
    fn depth_one_is_always_terminal() {
        let mut r = rng(1);
        for _ in 0..1000 {
            assert!(grow_tree(&mut r, &basis(), 1, 1, (-5.0, 5.0)).is_terminal());
        }
    }

    #[test]
    fn grown_trees_respect_depth() {
        let mut r = rng(2);
        let mut deepest = 0;
        for _ in 0..10_000 {
            let t = grow_tree(&mut r, &basis(), 5, 2, (-5.0, 5.0));
            assert!(t.depth() <= 5);
            assert!(t.min_arity() <= 2);
            deepest = deepest.max(t.depth());
        }
        assert_eq!(deepest, 5);
    }

    #[test]
    fn terminals_mix_variables_and_constants() {
        let mut r = rng(3);
        let leaves: Vec<Expr> = (0..4000).map(|_| terminal(&mut r, 1, (-5.0, 5.0))).collect();
        let vars = leaves.iter().filter(|e| matches!(e, Expr::Var(_))).count();
        let ints = leaves
            .iter()
            .filter(|e| matches!(e, Expr::Const(c) if INTEGER_CONSTANTS.contains(c)))
            .count();
        assert!((1800..2200).contains(&vars), "{vars}");
        assert!((800..1200).contains(&ints), "{ints}");
        for leaf in &leaves {
            if let Expr::Const(c) = leaf {
                assert!((-5.0..=5.0).contains(c));
            }
        }
    }

    #[test]
    fn seed_42_golden_tree() {
        let a = grow_tree(&mut rng(42), &basis(), 5, 1, (-5.0, 5.0));
        let b = grow_tree(&mut rng(42), &basis(), 5, 1, (-5.0, 5.0));
        assert_eq!(a, b);
        assert_eq!(format_sexpr(&a), GOLDEN_SEED_42);
    }

    const GOLDEN_SEED_42: &str = "(- x (sin (/ 3 (neg 2.2879848650077523))))";

    fn pop(entries: &[(&str, f64)]) -> Vec<Individual> {
        entries
            .iter()
            .map(|(t, c)| Individual { expr: parse_sexpr(t, 1).unwrap(), cost: *c })
            .collect()
    }

    #[test]
    fn full_tournament_finds_global_best() {
        let p = pop(&[("x", 3.0), ("1", 0.5), ("(sin x)", 0.1), ("2", f64::INFINITY)]);
        let mut r = rng(4);
        for _ in 0..50 {
            // With k draws over 4 entries the best is not always sampled;
            // a large k makes it near-certain.
            let w = tournament_select(&mut r, &p, 64);
            assert_eq!(w.cost, 0.1);
        }
    }

    #[test]
    fn unit_tournament_is_uniform() {
        let p = pop(&[("x", 3.0), ("1", 0.5), ("(sin x)", 0.1), ("2", 1.0)]);
        let mut r = rng(5);
        let mut hits = [0usize; 4];
        for _ in 0..8000 {
            let w = tournament_select(&mut r, &p, 1);
            let i = p.iter().position(|q| std::ptr::eq(q, w)).unwrap();
            hits[i] += 1;
        }
        assert!(hits.iter().all(|&h| (1800..2200).contains(&h)), "{hits:?}");
    }

    #[test]
    fn tournament_tie_prefers_fewer_nodes() {
        let p = pop(&[("(+ (* x 1) (- 2 1))", 0.5), ("(+ x 1)", 0.5)]);
        let mut r = rng(6);
        for _ in 0..50 {
            assert_eq!(tournament_select(&mut r, &p, 64).expr.node_count(), 3);
        }
    }

    #[test]
    fn finite_cost_beats_invalid() {
        let p = pop(&[("(log x)", f64::INFINITY), ("x", 1e9)]);
        let mut r = rng(7);
        for _ in 0..200 {
            let w = tournament_select(&mut r, &p, 2);
            let both_drawn_invalid = w.cost.is_infinite();
            if both_drawn_invalid {
                continue;
            }
            assert_eq!(w.cost, 1e9);
        }
    }

    #[test]
    fn crossover_of_identical_trees_at_root() {
        let t = parse_sexpr("(+ (sin x) 2)", 1).unwrap();
        // Any pair of nodes from identical parents can differ, but swapping
        // whole trees is the identity.
        let (a, b) = (t.replace_subtree(0, &t), t.replace_subtree(0, &t));
        assert_eq!((a, b), (t.clone(), t.clone()));
        let mut r = rng(8);
        let leaf = Expr::Var(0);
        assert_eq!(subtree_crossover(&mut r, &leaf, &leaf, 5), (leaf.clone(), leaf));
    }

    #[test]
    fn crossover_is_seeded() {
        let a = parse_sexpr("(+ (sin x) (* x 2))", 1).unwrap();
        let b = parse_sexpr("(exp (- x (cos 3)))", 1).unwrap();
        let one = subtree_crossover(&mut rng(9), &a, &b, 5);
        let two = subtree_crossover(&mut rng(9), &a, &b, 5);
        assert_eq!(one, two);
        assert_eq!(format_sexpr(&one.0), GOLDEN_CROSSOVER_SEED_9.0);
        assert_eq!(format_sexpr(&one.1), GOLDEN_CROSSOVER_SEED_9.1);
    }

    const GOLDEN_CROSSOVER_SEED_9: (&str, &str) = ("(+ (sin x) (exp (- x (cos 3))))", "(* x 2)");

    #[test]
    fn mutation_at_a_full_depth_leaf_yields_terminal() {
        let config = GpConfig { max_depth: 2, ..GpConfig::default() };
        let t = Expr::binary(BinaryOp::Add, Expr::Var(0), Expr::Const(1.0));
        let mut r = rng(10);
        for _ in 0..500 {
            let m = subtree_mutation(&mut r, &t, &config, 1);
            assert!(m.depth() <= 2);
            if let Expr::Binary(_, l, rr) = &m {
                assert!(l.is_terminal() && rr.is_terminal());
            }
        }
    }

    #[test]
    fn mutation_is_seeded() {
        let config = GpConfig::default();
        let a = parse_sexpr("(+ (sin x) (* x 2))", 1).unwrap();
        let one = subtree_mutation(&mut rng(11), &a, &config, 1);
        let two = subtree_mutation(&mut rng(11), &a, &config, 1);
        assert_eq!(one, two);
        assert_eq!(format_sexpr(&one), GOLDEN_MUTATION_SEED_11);
    }

    const GOLDEN_MUTATION_SEED_11: &str = "(+ 0.09792624403129935 (* x 2))";

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn operators_preserve_depth_bound(seed in any::<u64>()) {
            let config = GpConfig::default();
            let mut r = rng(seed);
            let mut a = grow_tree(&mut r, &config.basis, 5, 1, config.const_range);
            let mut b = grow_tree(&mut r, &config.basis, 5, 1, config.const_range);
            for _ in 0..160 {
                let (c, d) = subtree_crossover(&mut r, &a, &b, 5);
                prop_assert!(c.depth() <= 5 && d.depth() <= 5);
                let m = subtree_mutation(&mut r, &c, &config, 1);
                prop_assert!(m.depth() <= 5);
                a = m;
                b = d;
            }
        }
    }
}
