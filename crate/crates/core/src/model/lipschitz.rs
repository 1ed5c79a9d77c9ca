use super::{norm, DelayProblem, ModelError};

/// Time samples per segment.
const T_POINTS: usize = 5;
/// Upper bound on the number of `x` lattice points.
const X_BUDGET: f64 = 4096.0;
const MAX_PER_AXIS: usize = 17;

/// Empirical Lipschitz constant of `f` in `x` over `box × [a, b]`.
///
/// The lattice is fixed: `T_POINTS` times including both ends, an odd number
/// of equally spaced points per axis of the box, and every `y` in
/// `y_samples`. At each point the Jacobian in `x` is formed by central
/// differences and its spectral norm taken; difference quotients between
/// neighbouring lattice points are included so non-smooth `f` is covered.
/// The result is an estimate and certifies nothing.
pub fn estimate_lipschitz(
    p: &DelayProblem,
    bounds: &[(f64, f64)],
    segment: (f64, f64),
    y_samples: &[Vec<f64>],
) -> Result<f64, ModelError> {
    let d = p.dim;
    if bounds.len() != d {
        return Err(ModelError::Dimension {
            expected: d,
            found: bounds.len(),
        });
    }
    if let Some(&(lo, hi)) = bounds
        .iter()
        .find(|(lo, hi)| !(lo < hi && (hi - lo).is_finite()))
    {
        return Err(ModelError::Lipschitz(format!(
            "degenerate box side [{lo}, {hi}]"
        )));
    }
    let (a, b) = segment;
    if !(a < b && (b - a).is_finite()) {
        return Err(ModelError::Lipschitz(format!(
            "degenerate segment [{a}, {b}]"
        )));
    }
    if y_samples.is_empty() || y_samples.iter().any(|y| y.len() != d) {
        return Err(ModelError::Lipschitz(
            "y samples missing or of wrong dimension".into(),
        ));
    }

    let mut per_axis = (X_BUDGET.powf(1.0 / d as f64).floor() as usize).clamp(3, MAX_PER_AXIS);
    if per_axis.is_multiple_of(2) {
        per_axis -= 1;
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            (0..per_axis)
                .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                .collect()
        })
        .collect();
    let lattice_size = per_axis.pow(d as u32);

    let mut best = 0.0f64;
    let mut x = vec![0.0; d];
    let mut xn = vec![0.0; d];
    let mut fx = vec![0.0; d];
    let mut fn_ = vec![0.0; d];
    let mut fp = vec![0.0; d];
    let mut jac = vec![0.0; d * d];
    let mut idx = vec![0usize; d];
    for it in 0..T_POINTS {
        let t = a + (b - a) * it as f64 / (T_POINTS - 1) as f64;
        for y in y_samples {
            for flat in 0..lattice_size {
                let mut rest = flat;
                for k in 0..d {
                    idx[k] = rest % per_axis;
                    rest /= per_axis;
                    x[k] = axes[k][idx[k]];
                }
                p.eval_rhs(t, &x, y, &mut fx)?;

                for col in 0..d {
                    let delta = 1e-5 * x[col].abs().max(1.0);
                    xn.copy_from_slice(&x);
                    xn[col] = x[col] + delta;
                    p.eval_rhs(t, &xn, y, &mut fp)?;
                    xn[col] = x[col] - delta;
                    p.eval_rhs(t, &xn, y, &mut fn_)?;
                    for row in 0..d {
                        jac[row * d + col] = (fp[row] - fn_[row]) / (2.0 * delta);
                    }

                    // Quotient against the next lattice point along this axis.
                    if idx[col] + 1 < per_axis {
                        xn.copy_from_slice(&x);
                        xn[col] = axes[col][idx[col] + 1];
                        p.eval_rhs(t, &xn, y, &mut fp)?;
                        let df: Vec<f64> = fp.iter().zip(&fx).map(|(u, v)| u - v).collect();
                        best = best.max(norm(&df) / (xn[col] - x[col]));
                    }
                }
                best = best.max(spectral_norm(&jac, d));
            }
        }
    }
    Ok(best)
}

/// Largest singular value of the row-major `d × d` matrix.
fn spectral_norm(a: &[f64], d: usize) -> f64 {
    if d == 1 {
        return a[0].abs();
    }
    // Any column norm is a lower bound; it guards the power iteration against
    // a start vector orthogonal to the top singular vector.
    let mut lower = 0.0f64;
    for col in 0..d {
        let c: Vec<f64> = (0..d).map(|row| a[row * d + col]).collect();
        lower = lower.max(norm(&c));
    }
    if lower == 0.0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.37 * i as f64).collect();
    let mut av = vec![0.0; d];
    let mut sigma = 0.0;
    for _ in 0..200 {
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        for row in 0..d {
            av[row] = (0..d).map(|col| a[row * d + col] * v[col]).sum();
        }
        let next = norm(&av);
        for col in 0..d {
            v[col] = (0..d).map(|row| a[row * d + col] * av[row]).sum();
        }
        if (next - sigma).abs() <= 1e-14 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    sigma.max(lower)
}
