//! Learn closed-form models from input–output samples with genetic
//! programming, then invert them over a target performance box with
//! interval-based probabilistic set inversion.

pub mod data;
pub mod expr;
pub mod gp;
pub mod interval;
pub mod paving;
pub mod psi;
pub mod svg;

pub use expr::{format_sexpr, parse_sexpr, Expr, ExprError, ExprVector};
pub use interval::{Interval, IntervalBox, IntervalError};
pub use paving::{BoxClass, Paving};
