//! Textual right-hand sides `f(t, x, y)` and history functions `φ(t)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | variable | function '(' args ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2`
//! is `-(2^2) = -4` and `2^3^2 = 2^9 = 512`. Variables are `t`, `x1..xd` and
//! `y1..yd` (`x`/`y` are accepted as aliases of `x1`/`y1` when `d = 1`).
//! Functions: `exp`, `sin`, `cos`, `sqrt`, `abs`, `ln`, `pow(a, b)`.

mod eval;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use eval::EvalError;

/// Variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExprContext {
    pub dim: usize,
    /// `false` for history expressions, which may only use `t`.
    pub allow_xy: bool,
}

impl ExprContext {
    pub fn rhs(dim: usize) -> Self {
        ExprContext {
            dim,
            allow_xy: true,
        }
    }

    pub fn history() -> Self {
        ExprContext {
            dim: 0,
            allow_xy: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    /// Zero-based component of the current state.
    X(usize),
    /// Zero-based component of the delayed state.
    Y(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Ln,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "ln" => Func::Ln,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Ln => "ln",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A syntax tree node together with the byte offset it was parsed from.
///
/// Equality ignores offsets, so trees compare structurally.
#[derive(Debug, Clone)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Expr {
    pub fn new(node: Node) -> Self {
        Expr { node, offset: 0 }
    }

    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Binary(BinOp::Pow, ..) => 4,
            Node::Num(_) | Node::Pi | Node::Var(_) | Node::Call(..) => 5,
        }
    }

    fn fmt_min(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.fmt_min(f, 0)?;
            return f.write_str(")");
        }
        match &self.node {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Pi => f.write_str("pi"),
            Node::Var(Var::T) => f.write_str("t"),
            Node::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Node::Var(Var::Y(i)) => write!(f, "y{}", i + 1),
            Node::Neg(e) => {
                f.write_str("-")?;
                e.fmt_min(f, 3)
            }
            Node::Binary(op, l, r) => {
                let (sym, lmin, rmin) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => (" * ", 2, 3),
                    BinOp::Div => (" / ", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                l.fmt_min(f, lmin)?;
                f.write_str(sym)?;
                r.fmt_min(f, rmin)
            }
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt_min(f, 0)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Prints with the minimal parentheses needed to re-parse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_min(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: found {found}, expected one of: {}", expected.join(", "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{function}` at offset {offset} takes {expected} argument(s), got {found}")]
    Arity {
        offset: usize,
        function: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("expression nested too deeply at offset {offset}")]
    TooDeep { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::TooDeep { offset } => *offset,
        }
    }
}

/// A parsed expression bound to the context it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsExpr {
    pub root: Expr,
    pub context: ExprContext,
}

impl RhsExpr {
    pub fn parse(src: &str, context: ExprContext) -> Result<Self, ParseError> {
        let root = parser::parse(src, context)?;
        Ok(RhsExpr { root, context })
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        eval::eval(&self.root, t, x, y)
    }

    /// Evaluates a history expression, which depends on `t` only.
    pub fn eval_t(&self, t: f64) -> Result<f64, EvalError> {
        eval::eval(&self.root, t, &[], &[])
    }
}

impl fmt::Display for RhsExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Parses `src` for the given context.
pub fn parse(src: &str, context: ExprContext) -> Result<RhsExpr, ParseError> {
    RhsExpr::parse(src, context)
}
