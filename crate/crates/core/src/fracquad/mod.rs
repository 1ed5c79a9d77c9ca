//! Product quadrature for the Riemann–Liouville integral
//! `I^α g(t) = (1/Γ(α)) ∫₀^t (t − τ)^{α−1} g(τ) dτ` on uniform grids.

mod residual;

use thiserror::Error;

use crate::mlf::gamma::gamma_unchecked;
use crate::model::ModelError;
use crate::sum::CompensatedSum;

pub use residual::{caputo_residual, REFINEMENT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid quadrature parameter: {0}")]
    Param(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("trajectory does not match the problem: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Piecewise-linear interpolation of `g` against the exact kernel.
    ProductTrapezoid,
    /// `g` held constant at the left end of each step.
    ProductRectangle,
}

/// Quadrature weights `w[n][j]` with `I^α g(t_n) ≈ Σ_j w[n][j] g(t_j)`.
///
/// Equivalently `∫₀^{t_n} (t_n − τ)^{α−1} g dτ ≈ Γ(α) Σ_j w[n][j] g(t_j)`.
/// On a uniform grid the interior weights depend on `n − j` only, so the
/// table is stored as one Toeplitz vector plus one vector for `j = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionWeights {
    alpha: f64,
    h: f64,
    n: usize,
    rule: Rule,
    toeplitz: Vec<f64>,
    first: Vec<f64>,
}

/// Product-trapezoid weights for rows `0..=n`.
pub fn pt_weights(alpha: f64, h: f64, n: usize) -> Result<ConvolutionWeights, QuadError> {
    check_params(alpha, h, n)?;
    let p = alpha + 1.0;
    let scale = h.powf(alpha) / gamma_unchecked(alpha + 2.0);
    let mut toeplitz = Vec::with_capacity(n + 1);
    toeplitz.push(scale);
    toeplitz.extend((1..=n).map(|k| scale * second_difference(p, k as f64)));
    let mut first = Vec::with_capacity(n + 1);
    first.push(0.0);
    first.extend((1..=n).map(|k| scale * endpoint(p, k as f64)));
    Ok(ConvolutionWeights {
        alpha,
        h,
        n,
        rule: Rule::ProductTrapezoid,
        toeplitz,
        first,
    })
}

/// Product-rectangle weights, used as the predictor and as a debug rule.
pub fn rect_weights(alpha: f64, h: f64, n: usize) -> Result<ConvolutionWeights, QuadError> {
    check_params(alpha, h, n)?;
    let scale = h.powf(alpha) / gamma_unchecked(alpha + 1.0);
    // toeplitz[k] = scale·((k+1)^α − k^α) weights g_j with n − j = k + 1.
    let toeplitz = (0..=n)
        .map(|k| {
            let k = k as f64;
            let diff = if k == 0.0 {
                1.0
            } else {
                k.powf(alpha) * (alpha * (1.0 / k).ln_1p()).exp_m1()
            };
            scale * diff
        })
        .collect();
    Ok(ConvolutionWeights {
        alpha,
        h,
        n,
        rule: Rule::ProductRectangle,
        toeplitz,
        first: Vec::new(),
    })
}

fn check_params(alpha: f64, h: f64, n: usize) -> Result<(), QuadError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(QuadError::Param(format!(
            "order must lie in (0,1), got {alpha}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(QuadError::Param(format!("step must be positive, got {h}")));
    }
    if n == 0 {
        return Err(QuadError::Param("need at least one step".into()));
    }
    Ok(())
}

/// Binomial coefficients `C(p, i)` for `i = 0..len`.
fn binomials(p: f64, len: usize) -> impl Iterator<Item = (usize, f64)> {
    (0..len).scan(1.0, move |c, i| {
        let out = *c;
        *c *= (p - i as f64) / (i + 1) as f64;
        Some((i, out))
    })
}

/// `(k+1)^p − 2k^p + (k−1)^p`, summed as a series in `1/k` when direct
/// evaluation would cancel.
fn second_difference(p: f64, k: f64) -> f64 {
    if k < 4.0 {
        return (k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).powf(p);
    }
    let u = 1.0 / k;
    let mut s = CompensatedSum::default();
    let mut upow = 1.0;
    for (i, c) in binomials(p, 64) {
        if i >= 2 && i % 2 == 0 {
            let term = 2.0 * c * upow;
            s.add(term);
            if term.abs() < 1e-18 * s.value().abs() {
                break;
            }
        }
        upow *= u;
    }
    k.powf(p) * s.value()
}

/// `(k−1)^p − (k−p)·k^{p−1}`, the weight of `g_0` in row `k`.
fn endpoint(p: f64, k: f64) -> f64 {
    if k < 4.0 {
        return (k - 1.0).powf(p) - (k - p) * k.powf(p - 1.0);
    }
    let u = -1.0 / k;
    let mut s = CompensatedSum::default();
    let mut upow = 1.0;
    for (i, c) in binomials(p, 64) {
        if i >= 2 {
            let term = c * upow;
            s.add(term);
            if term.abs() < 1e-18 * s.value().abs() {
                break;
            }
        }
        upow *= u;
    }
    k.powf(p) * s.value()
}

impl ConvolutionWeights {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Largest row available.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    /// `w[n][j]` for `0 ≤ j ≤ n ≤ steps()`.
    #[inline]
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        debug_assert!(j <= n && n <= self.n);
        match self.rule {
            Rule::ProductTrapezoid => {
                if n == 0 {
                    0.0
                } else if j == 0 {
                    self.first[n]
                } else {
                    self.toeplitz[n - j]
                }
            }
            Rule::ProductRectangle => {
                if j == n {
                    0.0
                } else {
                    self.toeplitz[n - j - 1]
                }
            }
        }
    }

    /// Row `n` as a vector.
    pub fn row(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|j| self.weight(n, j)).collect()
    }

    /// `Σ_j w[n][j] g_j` for scalar samples `g_0..g_n`.
    pub fn apply(&self, n: usize, g: &[f64]) -> f64 {
        let mut s = CompensatedSum::default();
        for (j, gj) in g.iter().enumerate().take(n + 1) {
            s.add(self.weight(n, j) * gj);
        }
        s.value()
    }

    /// Adds `Σ_{j ∈ range} w[n][j] g_j` into `out` for node-major samples of width `out.len()`.
    pub(crate) fn accumulate(
        &self,
        n: usize,
        range: std::ops::Range<usize>,
        g: &[f64],
        out: &mut [f64],
    ) {
        let d = out.len();
        for j in range {
            let w = self.weight(n, j);
            for (o, v) in out.iter_mut().zip(&g[j * d..(j + 1) * d]) {
                *o += w * v;
            }
        }
    }
}

/// `I^α g(t_j)` for every node `t_j = j·h`, componentwise, with product-trapezoid weights.
///
/// `samples[j]` is `g(t_j)` for `j = 0..=n`; the result has the same shape.
pub fn rl_integral_grid(
    alpha: f64,
    h: f64,
    samples: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, QuadError> {
    if samples.len() < 2 {
        return Err(QuadError::Param("need samples at two or more nodes".into()));
    }
    let d = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        return Err(QuadError::Dimension {
            expected: d,
            found: bad.len(),
        });
    }
    let n = samples.len() - 1;
    let w = pt_weights(alpha, h, n)?;
    let mut out = vec![vec![0.0; d]; n + 1];
    let mut acc = vec![CompensatedSum::default(); d];
    for (row, o) in out.iter_mut().enumerate().skip(1) {
        acc.iter_mut().for_each(|a| *a = CompensatedSum::default());
        for (j, g) in samples.iter().enumerate().take(row + 1) {
            let wj = w.weight(row, j);
            for (a, v) in acc.iter_mut().zip(g) {
                a.add(wj * v);
            }
        }
        for (oi, a) in o.iter_mut().zip(&acc) {
            *oi = a.value();
        }
    }
    Ok(out)
}
