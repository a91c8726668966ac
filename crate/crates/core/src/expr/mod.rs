//! Expression trees over the model basis `{+, -, *, /, exp, log, sin, cos, tan, neg}`.
//!
//! Trees are immutable values; the genetic operators build new trees by
//! cloning and splicing subtrees addressed by their pre-order index.

mod eval;
mod sexpr;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use eval::{apply_binary, apply_unary, interval_binary, interval_unary, TAN_POLE_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown operator `{name}` at byte {pos}")]
    UnknownOperator { pos: usize, name: String },
    #[error("variable `{name}` at byte {pos} is out of range for arity {arity}")]
    VariableOutOfRange { pos: usize, name: String, arity: usize },
    #[error("operator `{op}` at byte {pos} takes {expected} operand(s), found {found}")]
    OperatorArity {
        pos: usize,
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} input value(s), got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("a model needs at least one output expression")]
    EmptyModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// One entry of a function basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 6] = [
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Neg,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Neg => "neg",
        }
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Unary(u) => u.symbol(),
            Op::Binary(b) => b.symbol(),
        }
    }

    /// The full ten-operator basis.
    pub fn full_basis() -> Vec<Op> {
        BinaryOp::ALL
            .iter()
            .map(|&b| Op::Binary(b))
            .chain(UnaryOp::ALL.iter().map(|&u| Op::Unary(u)))
            .collect()
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Op {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BinaryOp::ALL
            .iter()
            .map(|&b| Op::Binary(b))
            .chain(UnaryOp::ALL.iter().map(|&u| Op::Unary(u)))
            .find(|op| op.symbol() == s)
            .ok_or_else(|| ExprError::UnknownOperator {
                pos: 0,
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 0-based input dimension.
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn unary(op: UnaryOp, child: Expr) -> Expr {
        Expr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary(op, Box::new(left), Box::new(right))
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Expr::Const(_) | Expr::Var(_))
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, c) => 1 + c.node_count(),
            Expr::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// Number of levels; a lone terminal has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, c) => 1 + c.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Highest variable index used plus one (0 for constant trees).
    pub fn min_arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Unary(_, c) => c.min_arity(),
            Expr::Binary(_, l, r) => l.min_arity().max(r.min_arity()),
        }
    }

    /// Subtree at pre-order position `index`.
    pub fn subtree(&self, index: usize) -> Option<&Expr> {
        self.locate(index).map(|(e, _)| e)
    }

    /// 0-based level of the node at pre-order position `index` (root is 0).
    pub fn node_level(&self, index: usize) -> Option<usize> {
        self.locate(index).map(|(_, level)| level)
    }

    fn locate(&self, index: usize) -> Option<(&Expr, usize)> {
        let mut remaining = index;
        let mut level = 0;
        let mut node = self;
        loop {
            if remaining == 0 {
                return Some((node, level));
            }
            remaining -= 1;
            level += 1;
            match node {
                Expr::Const(_) | Expr::Var(_) => return None,
                Expr::Unary(_, c) => node = c,
                Expr::Binary(_, l, r) => {
                    let left = l.node_count();
                    if remaining < left {
                        node = l;
                    } else {
                        remaining -= left;
                        node = r;
                    }
                }
            }
        }
    }

    /// Copy of `self` with the subtree at pre-order `index` replaced.
    /// Out-of-range indices return an unchanged copy.
    pub fn replace_subtree(&self, index: usize, replacement: &Expr) -> Expr {
        if index == 0 {
            return replacement.clone();
        }
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, c) => Expr::unary(*op, c.replace_subtree(index - 1, replacement)),
            Expr::Binary(op, l, r) => {
                let left = l.node_count();
                if index - 1 < left {
                    Expr::binary(*op, l.replace_subtree(index - 1, replacement), (**r).clone())
                } else {
                    Expr::binary(
                        *op,
                        (**l).clone(),
                        r.replace_subtree(index - 1 - left, replacement),
                    )
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_sexpr(self))
    }
}

/// An ordered list of output expressions over a shared input arity.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprVector {
    arity: usize,
    components: Vec<Expr>,
}

impl ExprVector {
    pub fn new(arity: usize, components: Vec<Expr>) -> Result<Self, ExprError> {
        if components.is_empty() {
            return Err(ExprError::EmptyModel);
        }
        if let Some(bad) = components.iter().find(|c| c.min_arity() > arity) {
            return Err(ExprError::VariableOutOfRange {
                pos: 0,
                name: sexpr::variable_name(bad.min_arity() - 1, arity.max(bad.min_arity())),
                arity,
            });
        }
        Ok(Self { arity, components })
    }

    pub fn scalar(arity: usize, expr: Expr) -> Result<Self, ExprError> {
        Self::new(arity, vec![expr])
    }

    /// Parses whitespace-separated top-level expressions, one per output.
    pub fn parse(text: &str, arity: usize) -> Result<Self, ExprError> {
        let components = sexpr::parse_many(text, arity)?;
        Self::new(arity, components)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn outputs(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Canonical text: component S-expressions joined by single spaces.
    pub fn to_sexpr(&self) -> String {
        self.components
            .iter()
            .map(|c| format_sexpr_with_arity(c, self.arity))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Parses one S-expression with the given input arity.
pub fn parse_sexpr(text: &str, arity: usize) -> Result<Expr, ExprError> {
    sexpr::parse_one(text, arity)
}

/// Canonical S-expression text. Variables are named for the smallest arity
/// that covers the tree; use [`format_sexpr_with_arity`] when the declared
/// arity exceeds three.
pub fn format_sexpr(e: &Expr) -> String {
    sexpr::format_expr(e, e.min_arity())
}

pub fn format_sexpr_with_arity(e: &Expr, arity: usize) -> String {
    sexpr::format_expr(e, arity.max(e.min_arity()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wavelet_tree() -> Expr {
        parse_sexpr("(* (* (sin (* x 5)) 1)(exp (* (neg 1)(* x x))))", 1).unwrap()
    }

    #[test]
    fn counts_and_depth() {
        let e = wavelet_tree();
        assert_eq!(e.node_count(), 14);
        assert_eq!(e.depth(), 5);
        assert_eq!(Expr::Var(0).depth(), 1);
        assert_eq!(Expr::Const(2.0).node_count(), 1);
    }

    #[test]
    fn preorder_addressing() {
        let e = parse_sexpr("(+ (sin x) (* x 2))", 1).unwrap();
        assert_eq!(e.subtree(0), Some(&e));
        assert_eq!(e.subtree(1).map(format_sexpr).as_deref(), Some("(sin x)"));
        assert_eq!(e.subtree(2), Some(&Expr::Var(0)));
        assert_eq!(e.subtree(3).map(format_sexpr).as_deref(), Some("(* x 2)"));
        assert_eq!(e.subtree(5), Some(&Expr::Const(2.0)));
        assert_eq!(e.subtree(6), None);
        assert_eq!(e.node_level(2), Some(2));
        assert_eq!(e.node_level(3), Some(1));
    }

    #[test]
    fn replace_by_index() {
        let e = parse_sexpr("(+ (sin x) (* x 2))", 1).unwrap();
        let r = e.replace_subtree(3, &Expr::Const(7.0));
        assert_eq!(format_sexpr(&r), "(+ (sin x) 7)");
        let r = e.replace_subtree(2, &Expr::Const(1.0));
        assert_eq!(format_sexpr(&r), "(+ (sin 1) (* x 2))");
        assert_eq!(e.replace_subtree(0, &Expr::Var(0)), Expr::Var(0));
    }

    #[test]
    fn vector_models() {
        let m = ExprVector::parse("x y z (+ (- (* x x) (* y y)) (* z z))", 3).unwrap();
        assert_eq!(m.outputs(), 4);
        assert_eq!(m.arity(), 3);
        assert_eq!(m.to_sexpr(), "x y z (+ (- (* x x) (* y y)) (* z z))");
        assert!(matches!(ExprVector::parse("", 1), Err(ExprError::EmptyModel)));
        assert!(ExprVector::new(1, vec![Expr::Var(1)]).is_err());
    }

    #[test]
    fn basis_round_trips_through_symbols() {
        for op in Op::full_basis() {
            assert_eq!(op.symbol().parse::<Op>().unwrap(), op);
        }
        assert!("sqrt".parse::<Op>().is_err());
    }
}
