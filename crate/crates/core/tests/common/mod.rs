#![allow(dead_code)]

use std::sync::Arc;

use dfde::model::{DelayProblem, ExprRhs, HistoryFunction, Lipschitz};
use dfde::rhs_expr::{parse, ExprContext};

/// Γ(3/2) = √π/2.
pub const GAMMA_3_2: f64 = 0.886_226_925_452_758;

pub fn expr_problem(
    alpha: f64,
    delay: f64,
    horizon: f64,
    rhs: &[&str],
    phi: &[f64],
) -> DelayProblem {
    let d = rhs.len();
    let components = rhs
        .iter()
        .map(|s| parse(s, ExprContext::rhs(d)).unwrap())
        .collect();
    DelayProblem::new(
        alpha,
        delay,
        horizon,
        HistoryFunction::Constant(phi.to_vec()),
        Arc::new(ExprRhs::new(components)),
    )
}

/// D^{1/2} x = −x, φ ≡ 1, T = 2.
pub fn linear_decay() -> DelayProblem {
    expr_problem(0.5, 1.0, 2.0, &["-x"], &[1.0]).with_lipschitz(Lipschitz::Constant(1.0))
}

/// E_{1/2}(−√t) = exp(t)·erfc(√t).
pub fn linear_decay_exact(t: f64) -> f64 {
    t.exp() * statrs::function::erf::erfc(t.sqrt())
}

/// D^{1/2} x(t) = x(t − 1), φ ≡ 1, T = 2.
pub fn pure_delay() -> DelayProblem {
    expr_problem(0.5, 1.0, 2.0, &["y"], &[1.0]).with_lipschitz(Lipschitz::Constant(0.0))
}

/// Method of steps by hand: 1 + t^{1/2}/Γ(3/2) on [0, 1], plus (t − 1)/Γ(2) on [1, 2].
pub fn pure_delay_exact(t: f64) -> f64 {
    let mut x = 1.0 + t.sqrt() / GAMMA_3_2;
    if t > 1.0 {
        x += t - 1.0;
    }
    x
}

/// D^{1/2} x = exp(t²), φ ≡ 1.
pub fn counterexample(horizon: f64) -> DelayProblem {
    expr_problem(0.5, 1.0, horizon, &["exp(t^2)"], &[1.0]).with_lipschitz(Lipschitz::Constant(0.0))
}

/// D^{1/2} x = −x + 0.5 y, φ ≡ 1.
pub fn linear_delayed(horizon: f64) -> DelayProblem {
    expr_problem(0.5, 1.0, horizon, &["-x + 0.5*y"], &[1.0])
        .with_lipschitz(Lipschitz::Constant(1.0))
}

/// Largest relative error of `traj` against `exact` on nodes with t ≥ 0.
pub fn max_rel_error(traj: &dfde::model::Trajectory, exact: impl Fn(f64) -> f64) -> f64 {
    traj.nodes()
        .filter(|(j, _, _)| *j >= 0)
        .map(|(_, t, x)| {
            let e = exact(t);
            (x[0] - e).abs() / e.abs()
        })
        .fold(0.0, f64::max)
}
