//! Gamma function on the positive real axis.

use std::f64::consts::PI;

use super::MlfError;

const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;
/// Arguments at or above this use the Stirling series directly.
const STIRLING_MIN: f64 = 10.0;

/// Largest argument for which Γ(x) is finite in double precision.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Γ(x) for `x > 0`.
///
/// Integer arguments are computed as factorial products. Other arguments
/// below 10 are shifted upwards with the recurrence Γ(x + 1) = xΓ(x), and the
/// Stirling series (eight correction terms) takes over from 10 on.
pub fn gamma_fn(x: f64) -> Result<f64, MlfError> {
    if x.is_nan() || x <= 0.0 {
        return Err(MlfError::Domain(format!("gamma requires x > 0, got {x}")));
    }
    if x > GAMMA_MAX_ARG {
        return Err(MlfError::Overflow(format!(
            "gamma({x}) exceeds the f64 range"
        )));
    }
    let value = gamma_unchecked(x);
    if !value.is_finite() {
        return Err(MlfError::Overflow(format!(
            "gamma({x}) exceeds the f64 range"
        )));
    }
    Ok(value)
}

/// Γ(x) without argument validation; `x` must lie in `(0, GAMMA_MAX_ARG]`.
pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if x == x.floor() && x <= 171.0 {
        return factorial(x as u32 - 1);
    }
    if x >= STIRLING_MIN {
        return stirling(x);
    }
    let shift = (STIRLING_MIN - x).ceil();
    let mut denominator = 1.0;
    let mut y = x;
    for _ in 0..shift as u32 {
        denominator *= y;
        y += 1.0;
    }
    stirling(y) / denominator
}

/// ln Γ(x) for `x > 0`, finite well beyond the range of [`gamma_fn`].
pub fn ln_gamma(x: f64) -> Result<f64, MlfError> {
    if x.is_nan() || x <= 0.0 {
        return Err(MlfError::Domain(format!(
            "ln_gamma requires x > 0, got {x}"
        )));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x <= 170.0 {
        return gamma_unchecked(x).ln();
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + stirling_correction(x)
}

fn stirling_correction(y: f64) -> f64 {
    const COEF: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    COEF.iter().rev().fold(0.0, |acc, c| acc * inv2 + c) * inv
}

fn stirling(y: f64) -> f64 {
    // y^(y - 1/2) is split in two halves so the product stays finite up to GAMMA_MAX_ARG
    let half = y.powf((y - 0.5) * 0.5);
    SQRT_TWO_PI * (half * (-y).exp()) * half * stirling_correction(y).exp()
}

fn factorial(n: u32) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// sin(πx), exactly zero at integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    let (sign, r) = if r >= 1.0 { (-1.0, r - 1.0) } else { (1.0, r) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn special_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-15);
        // Γ(3/2) = Γ(1/2)/2 via the recurrence
        assert!(rel(gamma_fn(1.5).unwrap(), 0.5 * PI.sqrt()) < 1e-15);
        assert_eq!(gamma_fn(6.0).unwrap(), 120.0);
    }

    #[test]
    fn matches_extended_precision_reference() {
        // 60-digit reference values
        let cases = [
            (0.1, 9.513_507_698_668_731_836_292_487),
            (2.5, 1.329_340_388_179_137_020_473_626),
            (7.3, 1_271.423_633_663_909_273_057_994),
            (33.3, 7.487_577_596_522_706_607_992_066e35),
            (100.5, 9.320_963_104_082_716_608_349_11e156),
            (170.5, 5.562_092_414_559_999_610_705_81e305),
        ];
        for (x, want) in cases {
            let got = gamma_fn(x).unwrap();
            assert!(rel(got, want) < 1e-13, "gamma({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn recurrence_holds_on_a_lattice() {
        for i in 1..1700 {
            let x = i as f64 * 0.1 + 0.013;
            if x + 1.0 > GAMMA_MAX_ARG {
                break;
            }
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn domain_and_overflow_errors() {
        assert!(matches!(gamma_fn(0.0), Err(MlfError::Domain(_))));
        assert!(matches!(gamma_fn(-2.5), Err(MlfError::Domain(_))));
        assert!(matches!(gamma_fn(f64::NAN), Err(MlfError::Domain(_))));
        assert!(matches!(gamma_fn(172.0), Err(MlfError::Overflow(_))));
        assert!(gamma_fn(171.6).unwrap().is_finite());
    }

    #[test]
    fn ln_gamma_continues_past_overflow() {
        let x = 200.25;
        let a = ln_gamma(x).unwrap();
        let b = ln_gamma(x - 1.0).unwrap() + (x - 1.0).ln();
        assert!((a - b).abs() < 1e-11 * a);
        assert!((ln_gamma(170.5).unwrap() - gamma_fn(170.5).unwrap().ln()).abs() < 1e-11);
    }

    #[test]
    fn sin_pi_is_exact_at_integers() {
        for k in -5..=5 {
            assert_eq!(sin_pi(k as f64), 0.0);
        }
        assert!((sin_pi(0.5) - 1.0).abs() < 1e-16);
        assert!((sin_pi(1.5) + 1.0).abs() < 1e-16);
        assert!((sin_pi(0.25) - (PI / 4.0).sin()).abs() < 1e-16);
    }
}
