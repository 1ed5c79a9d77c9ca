use std::f64::consts::PI;

use thiserror::Error;

use super::{BinOp, Expr, Func, Node, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at offset {offset}")]
    DivisionByZero { offset: usize },
    #[error("ln of non-positive value {value} at offset {offset}")]
    LnNonPositive { offset: usize, value: f64 },
    #[error("sqrt of negative value {value} at offset {offset}")]
    SqrtNegative { offset: usize, value: f64 },
    #[error("negative base {base} with non-integer exponent {exponent} at offset {offset}")]
    NegativeBasePow {
        offset: usize,
        base: f64,
        exponent: f64,
    },
    #[error("non-finite result at offset {offset}")]
    NonFinite { offset: usize },
    #[error("variable at offset {offset} is outside the supplied state of dimension {dim}")]
    MissingVariable { offset: usize, dim: usize },
}

impl EvalError {
    pub fn offset(&self) -> usize {
        match self {
            EvalError::DivisionByZero { offset }
            | EvalError::LnNonPositive { offset, .. }
            | EvalError::SqrtNegative { offset, .. }
            | EvalError::NegativeBasePow { offset, .. }
            | EvalError::NonFinite { offset }
            | EvalError::MissingVariable { offset, .. } => *offset,
        }
    }
}

pub(super) fn eval(e: &Expr, t: f64, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let offset = e.offset;
    let v = match &e.node {
        Node::Num(v) => *v,
        Node::Pi => PI,
        Node::Var(Var::T) => t,
        Node::Var(Var::X(i)) => *x.get(*i).ok_or(EvalError::MissingVariable {
            offset,
            dim: x.len(),
        })?,
        Node::Var(Var::Y(i)) => *y.get(*i).ok_or(EvalError::MissingVariable {
            offset,
            dim: y.len(),
        })?,
        Node::Neg(inner) => -eval(inner, t, x, y)?,
        Node::Binary(op, l, r) => {
            let a = eval(l, t, x, y)?;
            let b = eval(r, t, x, y)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero { offset });
                    }
                    a / b
                }
                BinOp::Pow => power(a, b, offset)?,
            }
        }
        Node::Call(func, args) => {
            let a = eval(&args[0], t, x, y)?;
            match func {
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Abs => a.abs(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(EvalError::SqrtNegative { offset, value: a });
                    }
                    a.sqrt()
                }
                Func::Ln => {
                    if a <= 0.0 {
                        return Err(EvalError::LnNonPositive { offset, value: a });
                    }
                    a.ln()
                }
                Func::Pow => {
                    let b = eval(&args[1], t, x, y)?;
                    power(a, b, offset)?
                }
            }
        }
    };
    if !v.is_finite() {
        return Err(EvalError::NonFinite { offset });
    }
    Ok(v)
}

fn power(base: f64, exponent: f64, offset: usize) -> Result<f64, EvalError> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(EvalError::NegativeBasePow {
            offset,
            base,
            exponent,
        });
    }
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        return Ok(base.powi(exponent as i32));
    }
    Ok(base.powf(exponent))
}

#[cfg(test)]
mod tests {
    use crate::rhs_expr::{parse, EvalError, ExprContext};

    fn eval1(src: &str, t: f64, x: f64) -> Result<f64, EvalError> {
        parse(src, ExprContext::rhs(1))
            .unwrap()
            .eval(t, &[x], &[0.0])
    }

    #[test]
    fn located_runtime_errors() {
        assert_eq!(
            eval1("1 + 1/(t - 2)", 2.0, 0.0),
            Err(EvalError::DivisionByZero { offset: 5 })
        );
        assert!(matches!(
            eval1("ln(x1)", 0.0, 0.0),
            Err(EvalError::LnNonPositive { offset: 0, .. })
        ));
        assert!(matches!(
            eval1("sqrt(x1)", 0.0, -1.0),
            Err(EvalError::SqrtNegative { .. })
        ));
        assert!(matches!(
            eval1("x1^0.5", 0.0, -4.0),
            Err(EvalError::NegativeBasePow { offset: 2, .. })
        ));
        assert_eq!(eval1("x1^3", 0.0, -2.0), Ok(-8.0));
        assert_eq!(
            eval1("exp(t^2)", 30.0, 0.0),
            Err(EvalError::NonFinite { offset: 0 })
        );
    }

    #[test]
    fn missing_state_is_an_error() {
        let e = parse("x2", ExprContext::rhs(2)).unwrap();
        assert!(matches!(
            e.eval(0.0, &[1.0], &[1.0]),
            Err(EvalError::MissingVariable { .. })
        ));
    }
}
