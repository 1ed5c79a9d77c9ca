//! Method of steps with Picard iteration on each delay segment.
//!
//! On segment `k` the operator is
//! `T ξ(t) = φ(0) + I^α[f(·, x, x(· − r))] over [0, kr] + I^α[f(·, ξ, x(· − r))] over [kr, t]`,
//! discretized with product-trapezoid weights. Iterates are compared in the
//! weighted metric `sup ‖ξ − ξ̂‖ / E_α(β t^α)` with `t` measured from zero.

mod segment;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fracquad::QuadError;
use crate::mlf::{ml_log_eval, MlfError};
use crate::model::{norm, ModelError, Trajectory, ValidationReport};

pub use segment::{
    apply_operator, extend_horizon, solve_picard, solve_segment, Extension, PicardSolution,
};

pub const DEFAULT_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PicardError {
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
    #[error("segment {segment}: no convergence after {iterations} iterations (weighted distance {final_distance:e}, sup distance {sup_distance:e})")]
    NonConvergence {
        segment: usize,
        iterations: usize,
        final_distance: f64,
        sup_distance: f64,
    },
    #[error("segment {segment}: cannot choose a weight from max L = {max_l}")]
    Beta { segment: usize, max_l: f64 },
    #[error("segment {segment}, node {node}: {source}")]
    Rhs {
        segment: usize,
        node: usize,
        source: ModelError,
    },
    #[error("segment {segment}, node {node}: iterate is not finite")]
    NonFinite { segment: usize, node: usize },
    #[error(
        "horizon extension disagrees with the original run by {defect:e} (allowed {allowed:e})"
    )]
    Coincidence { defect: f64, allowed: f64 },
    #[error("bad input: {0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Mlf(#[from] MlfError),
}

impl PicardError {
    pub fn is_blow_up(&self) -> bool {
        match self {
            PicardError::NonFinite { .. } => true,
            PicardError::Rhs { source, .. } => source.is_blow_up(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuess {
    /// Every segment node starts at the value on the left end of the segment.
    ConstantExtension,
    /// Every segment node except the left end starts at zero.
    Zero,
}

/// When a segment iteration stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Weighted distance of successive iterates ≤ tol.
    Weighted,
    /// Additionally the sup distance ≤ tol·max(1, ‖ξ‖_∞).
    WeightedAndSup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub margin: f64,
    pub initial: InitialGuess,
    pub stop: StopRule,
}

impl PicardConfig {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        PicardConfig {
            tol,
            max_iter,
            margin: DEFAULT_MARGIN,
            initial: InitialGuess::ConstantExtension,
            stop: StopRule::WeightedAndSup,
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_initial(mut self, initial: InitialGuess) -> Self {
        self.initial = initial;
        self
    }

    fn check(&self) -> Result<(), PicardError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(PicardError::Input(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(PicardError::Input("max_iter must be at least 1".into()));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(PicardError::Input(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig::new(1e-10, 200)
    }
}

/// Per-segment record of the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub k: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub beta_k: f64,
    pub max_l: f64,
    /// True when `max_l` was sampled rather than supplied.
    pub lipschitz_estimated: bool,
    pub iterations: usize,
    /// Weighted distance between the initial guess and its image.
    pub initial_distance: f64,
    /// Weighted distance between the last two iterates.
    pub final_distance: f64,
    pub final_sup_distance: f64,
    /// Largest ratio of successive weighted distances above round-off.
    pub contraction_estimate: f64,
    /// `max_l / beta_k + 0.1`.
    pub contraction_bound: f64,
    /// Weighted distance between the returned values and their image.
    pub fixed_point_defect: f64,
}

/// Slack added to `max_L / β` when checking observed contraction.
pub const CONTRACTION_SLACK: f64 = 0.1;

/// `β = 2·max_L·(1 + margin)`, or `margin` when `max_L = 0`.
pub fn choose_beta(max_l: f64, margin: f64) -> f64 {
    if max_l == 0.0 {
        margin
    } else {
        2.0 * max_l * (1.0 + margin)
    }
}

/// The metric `sup_t ‖ξ(t) − ξ̂(t)‖ / E_α(β t^α)` over the nodes of a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNorm {
    pub alpha: f64,
    pub beta: f64,
    pub segment: (f64, f64),
}

impl WeightedNorm {
    pub fn new(alpha: f64, beta: f64, segment: (f64, f64)) -> Result<Self, PicardError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(PicardError::Input(format!(
                "order must lie in (0,1], got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(PicardError::Input(format!(
                "weight rate must be positive, got {beta}"
            )));
        }
        if !(segment.0 >= 0.0 && segment.0 <= segment.1) {
            return Err(PicardError::Input(format!("bad segment {segment:?}")));
        }
        Ok(WeightedNorm {
            alpha,
            beta,
            segment,
        })
    }

    /// `ln E_α(β t^α)`.
    pub fn log_weight(&self, t: f64) -> Result<f64, MlfError> {
        ml_log_eval(self.alpha, self.beta * t.powf(self.alpha))
    }

    pub fn log_weights(&self, times: &[f64]) -> Result<Vec<f64>, MlfError> {
        times.iter().map(|&t| self.log_weight(t)).collect()
    }

    /// Weighted distance between node-major samples `a` and `b` of width `dim`
    /// at `times`. Nodes outside the segment are ignored.
    pub fn distance(
        &self,
        times: &[f64],
        a: &[f64],
        b: &[f64],
        dim: usize,
    ) -> Result<f64, MlfError> {
        let (lo, hi) = self.segment;
        let mut worst = 0.0f64;
        let mut diff = vec![0.0; dim];
        for (i, &t) in times.iter().enumerate() {
            if t < lo || t > hi {
                continue;
            }
            for k in 0..dim {
                diff[k] = a[i * dim + k] - b[i * dim + k];
            }
            worst = worst.max(weighted(norm(&diff), self.log_weight(t)?));
        }
        Ok(worst)
    }

    /// Weighted norm of the samples of one trajectory over the segment.
    pub fn of_trajectory(&self, traj: &Trajectory) -> Result<f64, MlfError> {
        let mut worst = 0.0f64;
        for (j, t, x) in traj.nodes() {
            if j < 0 || t < self.segment.0 || t > self.segment.1 {
                continue;
            }
            worst = worst.max(weighted(norm(x), self.log_weight(t)?));
        }
        Ok(worst)
    }
}

/// `value / exp(log_weight)` without forming the weight.
fn weighted(value: f64, log_weight: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        (value.ln() - log_weight).exp()
    }
}
