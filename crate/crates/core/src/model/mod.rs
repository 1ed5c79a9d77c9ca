//! Problem statement, delay-aligned grids, history functions and trajectories.
//!
//! Vectors in the state space are measured with the Euclidean norm throughout
//! the crate; [`norm`] is the single place it is computed.

mod grid;
mod history;
mod lipschitz;
mod trajectory;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rhs_expr::{EvalError, RhsExpr};

pub use grid::{build_grid, UniformGrid};
pub use history::HistoryFunction;
pub use lipschitz::estimate_lipschitz;
pub use trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RhsError {
    /// The right-hand side produced an infinite or NaN component.
    #[error("component {component} is not finite")]
    NonFinite { component: usize },
    #[error("component {component}: {message}")]
    Eval { component: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("history: {0}")]
    History(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("right-hand side at t = {t}: {source}")]
    Rhs { t: f64, source: RhsError },
    #[error("Lipschitz data: {0}")]
    Lipschitz(String),
    #[error("{0}")]
    Invalid(ValidationReport),
}

impl ModelError {
    /// True when the failure is an overflow of the state or of `f`.
    pub fn is_blow_up(&self) -> bool {
        matches!(
            self,
            ModelError::Rhs {
                source: RhsError::NonFinite { .. },
                ..
            }
        )
    }
}

/// Every violation found by [`validate_problem`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid problem: {}", self.issues.join("; "))
    }
}

impl std::error::Error for ValidationReport {}

/// Right-hand side `f(t, x, y)` with `y` the delayed state `x(t − r)`.
pub trait Rhs: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `f(t, x, y)` into `out`.
    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), RhsError>;

    fn describe(&self) -> String {
        "<function>".to_string()
    }
}

/// Right-hand side given by one parsed expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprRhs {
    pub components: Vec<RhsExpr>,
}

impl ExprRhs {
    pub fn new(components: Vec<RhsExpr>) -> Self {
        ExprRhs { components }
    }
}

impl Rhs for ExprRhs {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), RhsError> {
        for (component, (o, e)) in out.iter_mut().zip(&self.components).enumerate() {
            *o = e.eval(t, x, y).map_err(|err| match err {
                EvalError::NonFinite { .. } => RhsError::NonFinite { component },
                other => RhsError::Eval {
                    component,
                    message: other.to_string(),
                },
            })?;
        }
        Ok(())
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|e| e.to_string()).collect();
        format!("[{}]", parts.join(", "))
    }
}

/// Right-hand side backed by a closure.
pub struct FnRhs<F> {
    dim: usize,
    f: F,
}

impl<F> FnRhs<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnRhs { dim, f }
    }
}

impl<F> Rhs for FnRhs<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), RhsError> {
        (self.f)(t, x, y, out);
        match out.iter().position(|v| !v.is_finite()) {
            Some(component) => Err(RhsError::NonFinite { component }),
            None => Ok(()),
        }
    }
}

/// `L(t, y)` as a function of time and the delayed state.
pub type LipschitzFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Lipschitz data for `f` in its second argument.
#[derive(Clone)]
pub enum Lipschitz {
    Constant(f64),
    /// `L(t, y)`, evaluated along the known delayed trajectory.
    Function(LipschitzFn),
    /// Sampled with [`estimate_lipschitz`]; an estimate, never a certificate.
    Estimate,
}

impl fmt::Debug for Lipschitz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lipschitz::Constant(l) => f.debug_tuple("Constant").field(l).finish(),
            Lipschitz::Function(_) => f.write_str("Function(..)"),
            Lipschitz::Estimate => f.write_str("Estimate"),
        }
    }
}

/// A delay Caputo problem `D^α x(t) = f(t, x(t), x(t − r))` on `[0, horizon]`
/// with `x = φ` on `[−r, 0]`.
#[derive(Clone)]
pub struct DelayProblem {
    pub alpha: f64,
    pub delay: f64,
    pub horizon: f64,
    pub dim: usize,
    pub history: HistoryFunction,
    pub rhs: Arc<dyn Rhs>,
    pub lipschitz: Lipschitz,
}

impl fmt::Debug for DelayProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelayProblem")
            .field("alpha", &self.alpha)
            .field("delay", &self.delay)
            .field("horizon", &self.horizon)
            .field("dim", &self.dim)
            .field("history", &self.history)
            .field("rhs", &self.rhs.describe())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl DelayProblem {
    /// Problem with sampled Lipschitz data; set a constant with [`with_lipschitz`](Self::with_lipschitz).
    pub fn new(
        alpha: f64,
        delay: f64,
        horizon: f64,
        history: HistoryFunction,
        rhs: Arc<dyn Rhs>,
    ) -> Self {
        DelayProblem {
            alpha,
            delay,
            horizon,
            dim: rhs.dim(),
            history,
            rhs,
            lipschitz: Lipschitz::Estimate,
        }
    }

    pub fn with_lipschitz(mut self, lipschitz: Lipschitz) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    /// `f(t, x, y)` into `out`, with the failure location attached.
    pub fn eval_rhs(
        &self,
        t: f64,
        x: &[f64],
        y: &[f64],
        out: &mut [f64],
    ) -> Result<(), ModelError> {
        self.rhs
            .eval(t, x, y, out)
            .map_err(|source| ModelError::Rhs { t, source })
    }

    pub fn grid(&self, steps_per_delay: usize) -> Result<UniformGrid, ModelError> {
        build_grid(self.delay, self.horizon, steps_per_delay)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Checks parameter ranges and evaluates `φ`, `f` and the Lipschitz data at
/// sample points, collecting every violation.
pub fn validate_problem(p: &DelayProblem) -> Result<(), ValidationReport> {
    let mut issues = Vec::new();
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        issues.push(format!("order must lie in (0,1), got {}", p.alpha));
    }
    let delay_ok = p.delay > 0.0 && p.delay.is_finite();
    if !delay_ok {
        issues.push(format!("delay must be positive, got {}", p.delay));
    }
    let horizon_ok = p.horizon > 0.0 && p.horizon.is_finite();
    if !horizon_ok {
        issues.push(format!(
            "horizon must be positive and finite, got {}",
            p.horizon
        ));
    }
    if p.dim == 0 {
        issues.push("dimension must be at least 1".to_string());
    }
    if p.rhs.dim() != p.dim {
        issues.push(format!(
            "right-hand side has {} components but dimension is {}",
            p.rhs.dim(),
            p.dim
        ));
    }
    if p.history.dim() != p.dim {
        issues.push(format!(
            "history has dimension {} but dimension is {}",
            p.history.dim(),
            p.dim
        ));
    }
    match &p.lipschitz {
        Lipschitz::Constant(l) if !(*l >= 0.0 && l.is_finite()) => {
            issues.push(format!(
                "Lipschitz constant must be finite and non-negative, got {l}"
            ));
        }
        _ => {}
    }

    let sizes_ok = p.dim > 0 && p.rhs.dim() == p.dim && p.history.dim() == p.dim;
    if !(delay_ok && horizon_ok && sizes_ok) {
        return finish(issues);
    }
    if let Err(e) = p.history.check(p.delay) {
        issues.push(e.to_string());
        return finish(issues);
    }

    const SAMPLES: usize = 8;
    let mut phi = vec![0.0; p.dim];
    for i in 0..=SAMPLES {
        let t = -p.delay + p.delay * i as f64 / SAMPLES as f64;
        if let Err(e) = p.history.eval(t.min(0.0), &mut phi) {
            issues.push(e.to_string());
            return finish(issues);
        }
    }

    let mut x = vec![0.0; p.dim];
    let mut y = vec![0.0; p.dim];
    let mut out = vec![0.0; p.dim];
    p.history.eval(0.0, &mut x).expect("checked above");
    for i in 0..=SAMPLES {
        let t = p.horizon * i as f64 / SAMPLES as f64;
        let s = (t - p.delay).clamp(-p.delay, 0.0);
        p.history.eval(s, &mut y).expect("checked above");
        match p.eval_rhs(t, &x, &y, &mut out) {
            // Overflow away from t = 0 is growth of f, left to the solvers to report.
            Err(e) if e.is_blow_up() && t > 0.0 => {}
            Err(e) => {
                issues.push(e.to_string());
                break;
            }
            Ok(()) => {}
        }
        if let Lipschitz::Function(l) = &p.lipschitz {
            let v = l(t, &y);
            if !(v >= 0.0 && v.is_finite()) {
                issues.push(format!("Lipschitz function is {v} at t = {t}"));
                break;
            }
        }
    }
    finish(issues)
}

fn finish(issues: Vec<String>) -> Result<(), ValidationReport> {
    if issues.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { issues })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhs_expr::{parse, ExprContext};

    fn linear() -> DelayProblem {
        let f = parse("-x + 0.5*y", ExprContext::rhs(1)).unwrap();
        DelayProblem::new(
            0.5,
            1.0,
            2.0,
            HistoryFunction::Constant(vec![1.0]),
            Arc::new(ExprRhs::new(vec![f])),
        )
        .with_lipschitz(Lipschitz::Constant(1.0))
    }

    #[test]
    fn accepts_a_well_formed_problem() {
        validate_problem(&linear()).unwrap();
    }

    #[test]
    fn reports_every_violation() {
        let mut p = linear();
        p.alpha = 1.2;
        p.delay = -1.0;
        let report = validate_problem(&p).unwrap_err();
        assert_eq!(report.issues.len(), 2);
        assert!(report.issues[0].contains("order must lie in (0,1)"));
        assert!(report.issues[1].contains("delay must be positive"));
    }

    #[test]
    fn rejects_bad_lipschitz_and_unevaluable_rhs() {
        let p = linear().with_lipschitz(Lipschitz::Constant(f64::NAN));
        assert!(validate_problem(&p).is_err());

        let f = parse("ln(t - 5)", ExprContext::rhs(1)).unwrap();
        let mut p = linear();
        p.rhs = Arc::new(ExprRhs::new(vec![f]));
        let report = validate_problem(&p).unwrap_err();
        assert!(report.issues[0].contains("right-hand side"), "{report}");

        let p = linear().with_lipschitz(Lipschitz::Function(Arc::new(|_, _| -1.0)));
        assert!(validate_problem(&p).is_err());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let mut p = linear();
        p.history = HistoryFunction::Constant(vec![1.0, 2.0]);
        assert!(validate_problem(&p).is_err());
    }

    #[test]
    fn closure_rhs_flags_non_finite_output() {
        let f = FnRhs::new(1, |t: f64, _: &[f64], _: &[f64], out: &mut [f64]| {
            out[0] = (t * t).exp()
        });
        let mut out = [0.0];
        assert!(f.eval(1.0, &[0.0], &[0.0], &mut out).is_ok());
        assert_eq!(
            f.eval(30.0, &[0.0], &[0.0], &mut out),
            Err(RhsError::NonFinite { component: 0 })
        );
    }

    #[test]
    fn euclidean_norm_avoids_overflow() {
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(norm(&[0.0, 0.0]), 0.0);
        let big = norm(&[3e200, 4e200]);
        assert!((big / 5e200 - 1.0).abs() < 1e-15);
    }
}
