//! Fractional Adams–Bashforth–Moulton marching on the delay-aligned grid.
//!
//! Predictor: product-rectangle weights on the stored `f` samples.
//! Corrector: product-trapezoid weights including the predicted endpoint.
//! The delayed argument at node `n` is the stored node `n − m`.

use std::sync::Arc;

use thiserror::Error;

use crate::fracquad::{pt_weights, rect_weights, ConvolutionWeights, QuadError, Rule};
use crate::model::{
    norm, validate_problem, DelayProblem, ModelError, Trajectory, ValidationReport,
};

/// Marching stops once `‖x_n‖` exceeds this.
pub const BLOW_UP_THRESHOLD: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeceError {
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
    #[error("blow-up at node {node} (t = {t}): state is no longer finite or exceeds 1e300")]
    BlowUp { node: usize, t: f64 },
    #[error("node {node}: {source}")]
    Rhs { node: usize, source: ModelError },
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PeceError {
    pub fn is_blow_up(&self) -> bool {
        match self {
            PeceError::BlowUp { .. } => true,
            PeceError::Rhs { source, .. } => source.is_blow_up(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeceConfig {
    pub corrector_sweeps: usize,
    /// Product-trapezoid weights to reuse; built per solve when absent.
    pub weights: Option<Arc<ConvolutionWeights>>,
}

impl Default for PeceConfig {
    fn default() -> Self {
        PeceConfig {
            corrector_sweeps: 1,
            weights: None,
        }
    }
}

impl PeceConfig {
    pub fn with_sweeps(sweeps: usize) -> Self {
        PeceConfig {
            corrector_sweeps: sweeps,
            weights: None,
        }
    }
}

/// Marches `j = 1..=n_total` on the grid with `m` steps per delay.
pub fn solve_pece(p: &DelayProblem, m: usize, cfg: &PeceConfig) -> Result<Trajectory, PeceError> {
    validate_problem(p)?;
    if cfg.corrector_sweeps == 0 {
        return Err(PeceError::Config(
            "corrector_sweeps must be at least 1".into(),
        ));
    }
    let grid = p.grid(m)?;
    let n_total = grid.n_total();
    let h = grid.step();
    let corrector = match &cfg.weights {
        Some(w) => {
            if w.rule() != Rule::ProductTrapezoid
                || w.alpha() != p.alpha
                || w.step() != h
                || w.steps() < n_total
            {
                return Err(PeceError::Config(
                    "shared weights do not match the problem grid".into(),
                ));
            }
            Arc::clone(w)
        }
        None => Arc::new(pt_weights(p.alpha, h, n_total)?),
    };
    let predictor = rect_weights(p.alpha, h, n_total)?;

    let d = p.dim;
    let mi = m as isize;
    let mut traj = Trajectory::from_history(grid, &p.history)?;
    let phi0 = traj.at(0).to_vec();
    let mut fs = vec![0.0; (n_total + 1) * d];
    p.eval_rhs(0.0, traj.at(0), traj.at(-mi), &mut fs[..d])
        .map_err(|source| PeceError::Rhs { node: 0, source })?;

    let mut x = vec![0.0; d];
    let mut fixed = vec![0.0; d];
    let mut f_end = vec![0.0; d];
    for n in 1..=n_total {
        let t = grid.time(n as isize);
        let y = traj.at(n as isize - mi).to_vec();

        x.copy_from_slice(&phi0);
        predictor.accumulate(n, 0..n, &fs, &mut x);

        fixed.copy_from_slice(&phi0);
        corrector.accumulate(n, 0..n, &fs, &mut fixed);
        let w_end = corrector.weight(n, n);
        for _ in 0..cfg.corrector_sweeps {
            check_state(&x, n, t)?;
            p.eval_rhs(t, &x, &y, &mut f_end)
                .map_err(|source| blow_up_or(source, n, t))?;
            for k in 0..d {
                x[k] = fixed[k] + w_end * f_end[k];
            }
        }
        check_state(&x, n, t)?;
        traj.set(n as isize, &x);
        p.eval_rhs(t, &x, &y, &mut fs[n * d..(n + 1) * d])
            .map_err(|source| blow_up_or(source, n, t))?;
    }
    Ok(traj)
}

fn check_state(x: &[f64], node: usize, t: f64) -> Result<(), PeceError> {
    let size = norm(x);
    if !size.is_finite() || size > BLOW_UP_THRESHOLD {
        return Err(PeceError::BlowUp { node, t });
    }
    Ok(())
}

fn blow_up_or(source: ModelError, node: usize, t: f64) -> PeceError {
    if source.is_blow_up() {
        PeceError::BlowUp { node, t }
    } else {
        PeceError::Rhs { node, source }
    }
}
