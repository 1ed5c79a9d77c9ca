use std::fmt;

use crate::rhs_expr::RhsExpr;

use super::ModelError;

/// Initial function φ on `[−r, 0]`.
#[derive(Clone, PartialEq)]
pub enum HistoryFunction {
    Constant(Vec<f64>),
    /// Nodes `times` (strictly increasing, from `−r` to `0`) with one value
    /// vector per node; linear interpolation in between.
    Samples {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    /// One expression of `t` per component.
    Expr(Vec<RhsExpr>),
}

impl fmt::Debug for HistoryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryFunction::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            HistoryFunction::Samples { times, .. } => {
                write!(f, "Samples({} nodes)", times.len())
            }
            HistoryFunction::Expr(e) => {
                let src: Vec<String> = e.iter().map(|e| e.to_string()).collect();
                f.debug_tuple("Expr").field(&src).finish()
            }
        }
    }
}

impl HistoryFunction {
    pub fn dim(&self) -> usize {
        match self {
            HistoryFunction::Constant(v) => v.len(),
            HistoryFunction::Samples { values, .. } => values.first().map_or(0, Vec::len),
            HistoryFunction::Expr(e) => e.len(),
        }
    }

    /// Structural checks against the delay: sample nodes must be strictly
    /// increasing and span exactly `[−r, 0]`.
    pub fn check(&self, delay: f64) -> Result<(), ModelError> {
        match self {
            HistoryFunction::Constant(v) => {
                if v.is_empty() {
                    return Err(ModelError::History("constant history is empty".into()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ModelError::History("constant history is not finite".into()));
                }
            }
            HistoryFunction::Samples { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(ModelError::History(
                        "sampled history needs at least two nodes, each with a value".into(),
                    ));
                }
                let d = values[0].len();
                if d == 0 || values.iter().any(|v| v.len() != d) {
                    return Err(ModelError::History(
                        "sampled history values have inconsistent dimension".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(ModelError::History(
                        "sampled history nodes must be strictly increasing".into(),
                    ));
                }
                let slack = 1e-12 * delay.max(1.0);
                if (times[0] + delay).abs() > slack || times[times.len() - 1].abs() > slack {
                    return Err(ModelError::History(format!(
                        "sampled history must span [-{delay}, 0], got [{}, {}]",
                        times[0],
                        times[times.len() - 1]
                    )));
                }
                if values.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(ModelError::History("sampled history is not finite".into()));
                }
            }
            HistoryFunction::Expr(e) => {
                if e.is_empty() {
                    return Err(ModelError::History(
                        "history expression list is empty".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// φ(t) written into `out`, for `t ∈ [−r, 0]`.
    pub fn eval(&self, t: f64, out: &mut [f64]) -> Result<(), ModelError> {
        if out.len() != self.dim() {
            return Err(ModelError::Dimension {
                expected: self.dim(),
                found: out.len(),
            });
        }
        match self {
            HistoryFunction::Constant(v) => out.copy_from_slice(v),
            HistoryFunction::Samples { times, values } => {
                let last = times.len() - 1;
                let t = t.clamp(times[0], times[last]);
                let i = times.partition_point(|&s| s <= t).clamp(1, last);
                let (t0, t1) = (times[i - 1], times[i]);
                let theta = (t - t0) / (t1 - t0);
                for (o, (a, b)) in out.iter_mut().zip(values[i - 1].iter().zip(&values[i])) {
                    *o = a + theta * (b - a);
                }
            }
            HistoryFunction::Expr(e) => {
                for (o, expr) in out.iter_mut().zip(e) {
                    *o = expr
                        .eval_t(t)
                        .map_err(|err| ModelError::History(format!("at t = {t}: {err}")))?;
                }
            }
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::History(format!(
                "history is not finite at t = {t}"
            )));
        }
        Ok(())
    }
}
