//! Mittag-Leffler function E_α(z) and the Gamma function on real arguments.
//!
//! E_α(z) = Σ_{k≥0} z^k / Γ(αk + 1) for 0 < α ≤ 1.
//!
//! Two evaluation branches are used:
//!
//! * the power series, summed with compensation, for `z` below
//!   [`MlfParams::asymptotic_switch`];
//! * the exponential asymptotic form
//!   `E_α(z) = exp(z^{1/α}) / α − Σ_{k≥1} z^{−k} / Γ(1 − αk)`
//!   above it, with the algebraic tail truncated at its smallest term.
//!
//! The default switch sits where `z^{1/α} = 16`. At that point the dropped
//! remainder of the asymptotic form is below double-precision resolution
//! relative to `exp(z^{1/α})`, and for α ≥ 0.25 the series needs fewer than 300
//! terms (smaller orders get a proportionally larger budget).
//!
//! [`ml_log_eval`] returns ln E_α(z) and stays finite long after E_α(z) itself
//! overflows, which is what the weighted norms in [`crate::picard`] and
//! [`crate::growth`] rely on.

pub(crate) mod gamma;

pub use gamma::{gamma_fn, ln_gamma, GAMMA_MAX_ARG};
pub(crate) use gamma::{gamma_unchecked, ln_gamma_unchecked};

use gamma::sin_pi;
use thiserror::Error;

use crate::sum::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlfError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("series did not converge within {terms} terms (alpha = {alpha}, z = {z})")]
    NonConvergence { alpha: f64, z: f64, terms: usize },
    #[error("cancellation in the series amplifies round-off by {amplification:.3e} (alpha = {alpha}, z = {z})")]
    PrecisionLoss {
        alpha: f64,
        z: f64,
        amplification: f64,
    },
}

/// Value of z^{1/α} at which the default switch to the asymptotic form occurs.
pub const DEFAULT_SWITCH_EXPONENT: f64 = 16.0;

/// Largest tolerated ratio Σ|terms| / |Σ terms| for negative arguments.
const MAX_AMPLIFICATION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlfParams {
    pub alpha: f64,
    /// A term counts as negligible once it is below `series_tol` times the partial sum.
    pub series_tol: f64,
    pub max_terms: usize,
    /// Arguments `z ≥ asymptotic_switch` use the asymptotic form.
    pub asymptotic_switch: f64,
}

impl MlfParams {
    pub fn new(alpha: f64) -> Result<Self, MlfError> {
        let params = MlfParams {
            alpha,
            series_tol: 1e-17,
            max_terms: default_max_terms(alpha),
            asymptotic_switch: DEFAULT_SWITCH_EXPONENT.powf(alpha),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), MlfError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(MlfError::Domain(format!(
                "order must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.series_tol > 0.0) {
            return Err(MlfError::Domain("series_tol must be positive".into()));
        }
        if self.max_terms < 10 {
            return Err(MlfError::Domain("max_terms must be at least 10".into()));
        }
        if !(self.asymptotic_switch > 1.0) {
            return Err(MlfError::Domain("asymptotic_switch must exceed 1".into()));
        }
        Ok(())
    }
}

// Near the switch the terms peak at k ≈ 16/α with spread sqrt(16)/α.
fn default_max_terms(alpha: f64) -> usize {
    if !(alpha > 0.0) {
        return 300;
    }
    let w = DEFAULT_SWITCH_EXPONENT;
    let needed = (w + 12.0 * w.sqrt()) / alpha + 50.0;
    needed.ceil().clamp(300.0, 1e6) as usize
}

/// E_α(z) with default parameters.
pub fn ml_eval(alpha: f64, z: f64) -> Result<f64, MlfError> {
    ml_eval_with(&MlfParams::new(alpha)?, z)
}

/// ln E_α(z) with default parameters.
pub fn ml_log_eval(alpha: f64, z: f64) -> Result<f64, MlfError> {
    ml_log_eval_with(&MlfParams::new(alpha)?, z)
}

pub fn ml_eval_with(params: &MlfParams, z: f64) -> Result<f64, MlfError> {
    params.validate()?;
    if !z.is_finite() {
        return Err(MlfError::Domain(format!(
            "argument must be finite, got {z}"
        )));
    }
    let alpha = params.alpha;
    if z >= params.asymptotic_switch {
        let log_value = asymptotic_log(alpha, z);
        if log_value > f64::MAX.ln() {
            return Err(MlfError::Overflow(format!(
                "E_{alpha}({z}) = exp({log_value:.6e}) is not representable; use ml_log_eval"
            )));
        }
        return Ok(asymptotic(alpha, z));
    }
    if z >= 0.0 {
        return Ok(series(params, z)?.sum);
    }
    if alpha == 1.0 {
        // E_1(z) E_1(−z) = 1, so the alternating series is never summed
        return match ml_eval_with(params, -z) {
            Ok(v) => Ok(1.0 / v),
            Err(MlfError::Overflow(_)) => Ok(0.0),
            Err(e) => Err(e),
        };
    }
    let s = series(params, z)?;
    let amplification = s.abs_sum / s.sum.abs();
    if !(amplification <= MAX_AMPLIFICATION) {
        return Err(MlfError::PrecisionLoss {
            alpha,
            z,
            amplification,
        });
    }
    Ok(s.sum)
}

/// ln E_α(z). For negative arguments with α < 1 this is the log of
/// [`ml_eval_with`], so the same precision-loss limit applies.
pub fn ml_log_eval_with(params: &MlfParams, z: f64) -> Result<f64, MlfError> {
    params.validate()?;
    if !z.is_finite() {
        return Err(MlfError::Domain(format!(
            "argument must be finite, got {z}"
        )));
    }
    if z < 0.0 {
        if params.alpha == 1.0 {
            return Ok(z);
        }
        return Ok(ml_eval_with(params, z)?.ln());
    }
    if z >= params.asymptotic_switch {
        Ok(asymptotic_log(params.alpha, z))
    } else {
        Ok(series(params, z)?.sum.ln())
    }
}

struct SeriesSum {
    sum: f64,
    abs_sum: f64,
}

fn series(params: &MlfParams, z: f64) -> Result<SeriesSum, MlfError> {
    let alpha = params.alpha;
    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut negligible_run = 0;
    for k in 0..params.max_terms {
        let term = series_term(alpha, z, k);
        acc.add(term);
        abs_sum += term.abs();
        // for alternating sums the scale is Σ|terms|; cancellation is judged by the caller
        let scale = if z < 0.0 { abs_sum } else { acc.value().abs() };
        // three consecutive negligible terms end the summation
        if term.abs() <= params.series_tol * scale {
            negligible_run += 1;
            if negligible_run == 3 {
                return Ok(SeriesSum {
                    sum: acc.value(),
                    abs_sum,
                });
            }
        } else {
            negligible_run = 0;
        }
    }
    Err(MlfError::NonConvergence {
        alpha,
        z,
        terms: params.max_terms,
    })
}

fn series_term(alpha: f64, z: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if z == 0.0 {
        return 0.0;
    }
    let g = alpha * k as f64 + 1.0;
    if g <= 170.0 {
        let power = z.powi(k as i32);
        if power.is_finite() && power != 0.0 {
            return power / gamma_unchecked(g);
        }
    }
    let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    sign * (k as f64 * z.abs().ln() - ln_gamma_unchecked(g)).exp()
}

/// Σ_{k≥1} z^{−k} / Γ(1 − αk), truncated at its smallest term.
///
/// Uses 1/Γ(1 − s) = Γ(s) sin(πs) / π, so terms with integer αk vanish.
fn algebraic_tail(alpha: f64, z: f64, w: f64) -> f64 {
    let ln_z = z.ln();
    let mut acc = CompensatedSum::default();
    let mut previous_magnitude = f64::INFINITY;
    for k in 1..=400 {
        let s = alpha * k as f64;
        let ln_magnitude = ln_gamma_unchecked(s) - k as f64 * ln_z;
        if ln_magnitude > previous_magnitude {
            break;
        }
        previous_magnitude = ln_magnitude;
        acc.add(ln_magnitude.exp() * sin_pi(s) / std::f64::consts::PI);
        // negligible against the leading exp(w)/α
        if ln_magnitude - w < -45.0 {
            break;
        }
    }
    acc.value()
}

fn asymptotic(alpha: f64, z: f64) -> f64 {
    let w = z.powf(1.0 / alpha);
    w.exp() / alpha - algebraic_tail(alpha, z, w)
}

fn asymptotic_log(alpha: f64, z: f64) -> f64 {
    let w = z.powf(1.0 / alpha);
    let tail = algebraic_tail(alpha, z, w);
    let relative = alpha * tail * (-w).exp();
    w - alpha.ln() + (-relative).ln_1p()
}
