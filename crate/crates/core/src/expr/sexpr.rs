//! Prefix S-expression text for models, e.g. `(* (sin (* 5 x)) (exp (neg (* x x))))`.

use super::{Expr, ExprError, Op};

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                tokens.push((i, Token::Open));
                i += 1;
            }
            b')' => {
                tokens.push((i, Token::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                tokens.push((start, Token::Atom(&text[start..i])));
            }
        }
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    next: usize,
    arity: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, arity: usize) -> Self {
        Self {
            tokens: tokenize(text),
            next: 0,
            arity,
            end: text.len(),
        }
    }

    fn at_end(&self) -> bool {
        self.next >= self.tokens.len()
    }

    fn peek_pos(&self) -> usize {
        self.tokens.get(self.next).map_or(self.end, |(p, _)| *p)
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let Some((pos, token)) = self.tokens.get(self.next).cloned() else {
            return Err(ExprError::Syntax {
                pos: self.end,
                msg: "unexpected end of input".into(),
            });
        };
        self.next += 1;
        match token {
            Token::Atom(atom) => self.atom(pos, atom),
            Token::Close => Err(ExprError::Syntax {
                pos,
                msg: "unexpected `)`".into(),
            }),
            Token::Open => {
                let (op_pos, name) = match self.tokens.get(self.next).cloned() {
                    Some((p, Token::Atom(name))) => (p, name),
                    Some((p, _)) => {
                        return Err(ExprError::Syntax {
                            pos: p,
                            msg: "expected an operator after `(`".into(),
                        })
                    }
                    None => {
                        return Err(ExprError::Syntax {
                            pos: self.end,
                            msg: "unexpected end of input, unbalanced parenthesis".into(),
                        })
                    }
                };
                self.next += 1;
                let op = name.parse::<Op>().map_err(|_| ExprError::UnknownOperator {
                    pos: op_pos,
                    name: name.to_string(),
                })?;
                let mut operands = Vec::new();
                loop {
                    match self.tokens.get(self.next) {
                        Some((_, Token::Close)) => {
                            self.next += 1;
                            break;
                        }
                        Some(_) => operands.push(self.expr()?),
                        None => {
                            return Err(ExprError::Syntax {
                                pos: self.end,
                                msg: format!("unbalanced parenthesis opened at byte {pos}"),
                            })
                        }
                    }
                }
                build(op, op_pos, operands)
            }
        }
    }

    fn atom(&self, pos: usize, atom: &str) -> Result<Expr, ExprError> {
        let first = atom.as_bytes()[0];
        if first.is_ascii_digit() || matches!(first, b'-' | b'+' | b'.') {
            return match atom.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Expr::Const(v)),
                _ => Err(ExprError::Syntax {
                    pos,
                    msg: format!("invalid numeric literal `{atom}`"),
                }),
            };
        }
        let index = match atom {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => atom
                .strip_prefix('x')
                .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
                .and_then(|digits| digits.parse::<usize>().ok()),
        };
        match index {
            Some(i) if i < self.arity => Ok(Expr::Var(i)),
            Some(_) => Err(ExprError::VariableOutOfRange {
                pos,
                name: atom.to_string(),
                arity: self.arity,
            }),
            None if atom.parse::<Op>().is_ok() => Err(ExprError::Syntax {
                pos,
                msg: format!("operator `{atom}` used as an operand"),
            }),
            None => Err(ExprError::Syntax {
                pos,
                msg: format!("unknown symbol `{atom}`"),
            }),
        }
    }
}

fn build(op: Op, pos: usize, mut operands: Vec<Expr>) -> Result<Expr, ExprError> {
    let expected = match op {
        Op::Unary(_) => 1,
        Op::Binary(_) => 2,
    };
    if operands.len() != expected {
        return Err(ExprError::OperatorArity {
            pos,
            op: op.symbol().to_string(),
            expected,
            found: operands.len(),
        });
    }
    Ok(match op {
        Op::Unary(u) => Expr::unary(u, operands.pop().unwrap()),
        Op::Binary(b) => {
            let right = operands.pop().unwrap();
            let left = operands.pop().unwrap();
            Expr::binary(b, left, right)
        }
    })
}

pub(super) fn parse_one(text: &str, arity: usize) -> Result<Expr, ExprError> {
    let mut parser = Parser::new(text, arity);
    let e = parser.expr()?;
    if !parser.at_end() {
        return Err(ExprError::Syntax {
            pos: parser.peek_pos(),
            msg: "trailing input after expression".into(),
        });
    }
    Ok(e)
}

pub(super) fn parse_many(text: &str, arity: usize) -> Result<Vec<Expr>, ExprError> {
    let mut parser = Parser::new(text, arity);
    let mut out = Vec::new();
    while !parser.at_end() {
        out.push(parser.expr()?);
    }
    Ok(out)
}

pub(super) fn variable_name(index: usize, arity: usize) -> String {
    if arity <= 3 {
        ["x", "y", "z"][index].to_string()
    } else {
        format!("x{index}")
    }
}

fn format_const(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub(super) fn format_expr(e: &Expr, arity: usize) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, arity);
    out
}

fn write_expr(out: &mut String, e: &Expr, arity: usize) {
    match e {
        Expr::Const(v) => out.push_str(&format_const(*v)),
        Expr::Var(i) => out.push_str(&variable_name(*i, arity)),
        Expr::Unary(op, c) => {
            out.push('(');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, c, arity);
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            out.push('(');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, l, arity);
            out.push(' ');
            write_expr(out, r, arity);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{format_sexpr, format_sexpr_with_arity, parse_sexpr, BinaryOp, UnaryOp};
    use super::*;

    #[test]
    fn parses_redundant_forms() {
        let e = parse_sexpr("(* (* (sin (* x 5)) 1)(exp (* (neg 1)(* x x))))", 1).unwrap();
        let expected = Expr::binary(
            BinaryOp::Mul,
            Expr::binary(
                BinaryOp::Mul,
                Expr::unary(
                    UnaryOp::Sin,
                    Expr::binary(BinaryOp::Mul, Expr::Var(0), Expr::Const(5.0)),
                ),
                Expr::Const(1.0),
            ),
            Expr::unary(
                UnaryOp::Exp,
                Expr::binary(
                    BinaryOp::Mul,
                    Expr::unary(UnaryOp::Neg, Expr::Const(1.0)),
                    Expr::binary(BinaryOp::Mul, Expr::Var(0), Expr::Var(0)),
                ),
            ),
        );
        assert_eq!(e, expected);
        assert_eq!(
            format_sexpr(&e),
            "(* (* (sin (* x 5)) 1) (exp (* (neg 1) (* x x))))"
        );
    }

    #[test]
    fn canonical_form_is_a_fixpoint() {
        let text = "(* (sin (* 5 x)) (exp (neg (* x x))))";
        assert_eq!(format_sexpr(&parse_sexpr(text, 1).unwrap()), text);
    }

    #[test]
    fn atoms() {
        assert_eq!(parse_sexpr("x", 1).unwrap(), Expr::Var(0));
        assert_eq!(parse_sexpr("  -2.5 ", 1).unwrap(), Expr::Const(-2.5));
        assert_eq!(parse_sexpr("x3", 5).unwrap(), Expr::Var(3));
        assert_eq!(parse_sexpr("z", 3).unwrap(), Expr::Var(2));
        assert_eq!(format_sexpr(&Expr::Var(0)), "x");
        assert_eq!(
            format_sexpr(&Expr::binary(BinaryOp::Add, Expr::Var(0), Expr::Const(1.0))),
            "(+ x 1)"
        );
        assert_eq!(format_sexpr_with_arity(&Expr::Var(1), 4), "x1");
        assert_eq!(format_const(1e300), "1e300");
        assert_eq!(format_const(2.5e-9), "2.5e-9");
        assert_eq!(format_const(0.125), "0.125");
    }

    #[test]
    fn unbalanced_parenthesis() {
        let err = parse_sexpr("(+ x (log y)", 2).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { pos: 12, .. }), "{err:?}");
        let err = parse_sexpr("(+ x 1))", 1).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { pos: 7, .. }), "{err:?}");
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            parse_sexpr("(sqrt x)", 1),
            Err(ExprError::UnknownOperator { pos: 1, .. })
        ));
        assert!(matches!(
            parse_sexpr("(+ x y)", 1),
            Err(ExprError::VariableOutOfRange { pos: 5, arity: 1, .. })
        ));
        assert!(matches!(
            parse_sexpr("(sin x 1)", 1),
            Err(ExprError::OperatorArity { expected: 1, found: 2, .. })
        ));
        assert!(matches!(
            parse_sexpr("(+ x)", 1),
            Err(ExprError::OperatorArity { expected: 2, found: 1, .. })
        ));
        assert!(matches!(parse_sexpr("inf", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_sexpr("(+ x sin)", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_sexpr("", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_sexpr("(1 x)", 1), Err(ExprError::UnknownOperator { .. })));
    }
}
