//! Growth analysis of trajectories: Mittag-Leffler certificates
//! `‖x(t)‖ ≤ C·E_α(β t^α)`, the forcing condition on `f(t, 0, 0)`, the
//! explicit `exp(t²)`-forced solution and exponential-bound probes.
//!
//! Everything here is finite-horizon numerical evidence, computed in log space.

mod fit;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fracquad::{rl_integral_grid, QuadError};
use crate::mlf::{gamma_fn, ml_log_eval, MlfError};
use crate::model::{build_grid, norm, DelayProblem, Lipschitz, ModelError, Trajectory};

use fit::{fit_line, fit_quadratic};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrowthError {
    #[error("rate must be positive and finite, got {0}")]
    Rate(f64),
    #[error("no rates to probe")]
    EmptyProbe,
    #[error("trajectory has fewer than 3 nodes on [0, T]")]
    TooShort,
    #[error("explicit solution overflows at node {node} (t = {t})")]
    Overflow { node: usize, t: f64 },
    #[error("bad input: {0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Mlf(#[from] MlfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BoundedEvidence,
    Inconclusive,
    UnboundedEvidence,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::BoundedEvidence => "bounded-evidence",
            Verdict::Inconclusive => "inconclusive",
            Verdict::UnboundedEvidence => "unbounded-evidence",
        })
    }
}

/// Verdict thresholds; rates are per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Tail trend at or below this is bounded evidence.
    pub bounded_trend: f64,
    /// Tail trend at or above this is unbounded evidence.
    pub unbounded_trend: f64,
    /// Curvature of `ln‖x‖` at or above this, with `ln‖x‖` still rising,
    /// is unbounded evidence: growth faster than every exponential.
    pub curvature: f64,
    /// Fraction of the `t ≥ 0` nodes forming the tail window.
    pub tail_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bounded_trend: 1e-3,
            unbounded_trend: 0.1,
            curvature: 0.1,
            tail_fraction: 0.25,
        }
    }
}

/// Outcome of a bound test `‖x(t)‖ ≤ C·w(t)` over the nodes of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    /// `ln C`, the largest log-ratio.
    pub log_c: f64,
    /// Least-squares slope of `ln‖x‖ − ln w` over the tail window.
    pub tail_trend: f64,
    /// Second derivative of a least-squares quadratic of `ln‖x‖` over the tail.
    pub log_norm_curvature: f64,
    /// Slope of that quadratic at the last node.
    pub log_norm_end_rate: f64,
    /// Where a quadratic fit of the log-ratio reaches `ln C` again, if it bends upward.
    pub crossing_time_estimate: Option<f64>,
    pub verdict: Verdict,
}

/// Certificate for `‖x(t)‖ ≤ C·E_α(β t^α)` on the trajectory's nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
    /// `exp(log_c)`; infinite when it overflows.
    pub c: f64,
    pub log_c: f64,
    pub ratio_tail_trend: f64,
    pub log_norm_curvature: f64,
    pub crossing_time_estimate: Option<f64>,
    pub verdict: Verdict,
    pub h2: Option<H2Check>,
}

/// The forcing quotient `∫₀^t (t − τ)^{α−1}‖f(τ, 0, 0)‖ dτ / E_α(β t^α)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Check {
    pub beta: f64,
    pub horizon: f64,
    /// Largest quotient over the nodes.
    pub witness: f64,
    /// Least-squares slope of the quotient over the final quarter.
    pub tail_slope: f64,
    pub pass: bool,
    /// `β > 2L` when a constant `L` is known.
    pub beta_exceeds_2l: Option<bool>,
}

/// One row of [`exponential_bound_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub lambda: f64,
    pub c: f64,
    #[serde(flatten)]
    pub fit: BoundFit,
}

/// `(t_j, ln‖x_j‖)` for nodes with `t ≥ 0`; zero states give `−∞`.
fn log_norms(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.nodes()
        .filter(|(j, _, _)| *j >= 0)
        .map(|(_, t, x)| (t, norm(x).ln()))
        .collect()
}

/// Fits `ln‖x‖ − ln w` where `log_weight(t) = ln w(t)`.
fn analyze(
    samples: &[(f64, f64)],
    log_weight: impl Fn(f64) -> Result<f64, MlfError>,
    th: &Thresholds,
) -> Result<BoundFit, GrowthError> {
    if samples.len() < 3 {
        return Err(GrowthError::TooShort);
    }
    let mut ratios = Vec::with_capacity(samples.len());
    for &(t, ln_x) in samples {
        ratios.push((t, ln_x - log_weight(t)?));
    }
    let log_c = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);

    let tail_len =
        ((samples.len() as f64 * th.tail_fraction).ceil() as usize).clamp(3, samples.len());
    let tail = samples.len() - tail_len;
    let finite = |v: &[(f64, f64)]| -> Vec<(f64, f64)> {
        v.iter().copied().filter(|(_, y)| y.is_finite()).collect()
    };
    let tail_ratios = finite(&ratios[tail..]);
    let tail_logs = finite(&samples[tail..]);

    let tail_trend = fit_line(&tail_ratios).map_or(0.0, |(_, slope)| slope);
    let (curvature, end_rate) = match fit_quadratic(&tail_logs) {
        Some(q) => {
            let t_end = tail_logs[tail_logs.len() - 1].0;
            (q.second_derivative(), q.derivative(t_end))
        }
        None => (0.0, 0.0),
    };
    let crossing_time_estimate = fit_quadratic(&tail_ratios).and_then(|q| {
        let t_end = tail_ratios[tail_ratios.len() - 1].0;
        q.next_crossing(log_c, t_end)
    });

    let verdict =
        if tail_trend >= th.unbounded_trend || (curvature >= th.curvature && end_rate > 0.0) {
            Verdict::UnboundedEvidence
        } else if tail_trend <= th.bounded_trend {
            Verdict::BoundedEvidence
        } else {
            Verdict::Inconclusive
        };
    Ok(BoundFit {
        log_c,
        tail_trend,
        log_norm_curvature: curvature,
        log_norm_end_rate: end_rate,
        crossing_time_estimate,
        verdict,
    })
}

/// Certificate with the default thresholds.
pub fn certify_growth(
    traj: &Trajectory,
    alpha: f64,
    beta: f64,
) -> Result<GrowthCertificate, GrowthError> {
    certify_growth_with(traj, alpha, beta, &Thresholds::default())
}

/// `C = sup_j ‖x_j‖ / E_α(β t_j^α)` over nodes with `t ≥ 0`, with the tail
/// trend of the log-ratio and the verdict.
pub fn certify_growth_with(
    traj: &Trajectory,
    alpha: f64,
    beta: f64,
    th: &Thresholds,
) -> Result<GrowthCertificate, GrowthError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(GrowthError::Rate(beta));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GrowthError::Input(format!(
            "order must lie in (0,1], got {alpha}"
        )));
    }
    let samples = log_norms(traj);
    let fit = analyze(&samples, |t| ml_log_eval(alpha, beta * t.powf(alpha)), th)?;
    Ok(GrowthCertificate {
        alpha,
        beta,
        horizon: traj.grid().horizon(),
        c: fit.log_c.exp(),
        log_c: fit.log_c,
        ratio_tail_trend: fit.tail_trend,
        log_norm_curvature: fit.log_norm_curvature,
        crossing_time_estimate: fit.crossing_time_estimate,
        verdict: fit.verdict,
        h2: None,
    })
}

/// Tests `‖x(t)‖ ≤ C·e^{λt}` for each rate in `lambdas`.
pub fn exponential_bound_probe(
    traj: &Trajectory,
    lambdas: &[f64],
) -> Result<Vec<ProbeResult>, GrowthError> {
    exponential_bound_probe_with(traj, lambdas, &Thresholds::default())
}

pub fn exponential_bound_probe_with(
    traj: &Trajectory,
    lambdas: &[f64],
    th: &Thresholds,
) -> Result<Vec<ProbeResult>, GrowthError> {
    if lambdas.is_empty() {
        return Err(GrowthError::EmptyProbe);
    }
    let samples = log_norms(traj);
    lambdas
        .iter()
        .map(|&lambda| {
            if !lambda.is_finite() {
                return Err(GrowthError::Rate(lambda));
            }
            let fit = analyze(&samples, |t| Ok(lambda * t), th)?;
            Ok(ProbeResult {
                lambda,
                c: fit.log_c.exp(),
                fit,
            })
        })
        .collect()
}

/// Evaluates the forcing quotient on the grid with `m` steps per delay up to `horizon`.
///
/// `pass` means the quotient is not rising over the final quarter (slope ≤ 1e−3).
pub fn check_h2(
    p: &DelayProblem,
    beta: f64,
    horizon: f64,
    m: usize,
) -> Result<H2Check, GrowthError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(GrowthError::Rate(beta));
    }
    let grid = build_grid(p.delay, horizon, m)?;
    let d = p.dim;
    let zero = vec![0.0; d];
    let mut out = vec![0.0; d];
    let mut samples = Vec::with_capacity(grid.n_total() + 1);
    for j in 0..=grid.n_total() {
        let t = grid.time(j as isize);
        p.eval_rhs(t, &zero, &zero, &mut out)?;
        samples.push(vec![norm(&out)]);
    }
    let integral = rl_integral_grid(p.alpha, grid.step(), &samples)?;
    let gamma_alpha = gamma_fn(p.alpha)?;
    let mut quotient = Vec::with_capacity(integral.len());
    for (j, v) in integral.iter().enumerate() {
        let t = grid.time(j as isize);
        let num = gamma_alpha * v[0];
        let q = if num == 0.0 {
            0.0
        } else {
            (num.ln() - ml_log_eval(p.alpha, beta * t.powf(p.alpha))?).exp()
        };
        quotient.push((t, q));
    }
    let witness = quotient.iter().map(|q| q.1).fold(0.0, f64::max);
    let tail_len = (quotient.len().div_ceil(4)).max(2);
    let tail_slope = fit_line(&quotient[quotient.len() - tail_len..]).map_or(0.0, |(_, s)| s);
    let beta_exceeds_2l = match p.lipschitz {
        Lipschitz::Constant(l) => Some(beta > 2.0 * l),
        _ => None,
    };
    Ok(H2Check {
        beta,
        horizon: grid.horizon(),
        witness,
        tail_slope,
        pass: tail_slope <= 1e-3,
        beta_exceeds_2l,
    })
}

/// Delay used for the grid of [`counterexample_solution`]; the equation has no delay term.
pub const COUNTEREXAMPLE_DELAY: f64 = 1.0;

/// `x(t) = x₀ + I^α[exp(τ²)](t)`, the solution of `D^α x = exp(t²)` with `x ≡ x₀`
/// before zero, on a grid of `m` steps per unit time.
///
/// The grid always has at least one step, so `horizon = 0` yields `[−1, 1/m]`.
pub fn counterexample_solution(
    alpha: f64,
    x0: f64,
    horizon: f64,
    m: usize,
) -> Result<Trajectory, GrowthError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GrowthError::Input(format!(
            "order must lie in (0,1), got {alpha}"
        )));
    }
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(GrowthError::Input(format!(
            "x0 must be non-negative, got {x0}"
        )));
    }
    if !(horizon >= 0.0) {
        return Err(GrowthError::Input(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    if m == 0 {
        return Err(GrowthError::Input(
            "steps per delay must be at least 1".into(),
        ));
    }
    let h = COUNTEREXAMPLE_DELAY / m as f64;
    let grid = build_grid(COUNTEREXAMPLE_DELAY, horizon.max(h), m)?;
    let mut samples = Vec::with_capacity(grid.n_total() + 1);
    for j in 0..=grid.n_total() {
        let t = grid.time(j as isize);
        let g = (t * t).exp();
        if !g.is_finite() {
            return Err(GrowthError::Overflow { node: j, t });
        }
        samples.push(vec![g]);
    }
    let integral = rl_integral_grid(alpha, grid.step(), &samples)?;
    let mut values = vec![x0; grid.steps_per_delay()];
    for (j, v) in integral.iter().enumerate() {
        let x = x0 + v[0];
        if !x.is_finite() || x > 1e300 {
            return Err(GrowthError::Overflow {
                node: j,
                t: grid.time(j as isize),
            });
        }
        values.push(x);
    }
    Ok(Trajectory::from_flat(grid, 1, values)?)
}
