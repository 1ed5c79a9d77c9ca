//! Small least-squares fits on centred and scaled abscissae.

/// `(intercept, slope)` of the least-squares line, or `None` for fewer than
/// two points or a degenerate spread.
pub(super) fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, y) in points {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
    }
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    Some((ym - slope * tm, slope))
}

/// `c0 + c1·u + c2·u²` with `u = (t − t0)/s`.
#[derive(Debug, Clone, Copy)]
pub(super) struct Quadratic {
    t0: f64,
    s: f64,
    c: [f64; 3],
}

impl Quadratic {
    pub(super) fn value(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.s;
        self.c[0] + u * (self.c[1] + u * self.c[2])
    }

    pub(super) fn derivative(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.s;
        (self.c[1] + 2.0 * self.c[2] * u) / self.s
    }

    pub(super) fn second_derivative(&self) -> f64 {
        2.0 * self.c[2] / (self.s * self.s)
    }

    /// First `t > after` with `value(t) = level`, if the parabola opens upward.
    pub(super) fn next_crossing(&self, level: f64, after: f64) -> Option<f64> {
        if !(self.c[2] > 0.0) || !level.is_finite() {
            return None;
        }
        if self.value(after) >= level {
            return Some(after);
        }
        let (a, b, c) = (self.c[2], self.c[1], self.c[0] - level);
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let u = (-b + disc.sqrt()) / (2.0 * a);
        let t = self.t0 + self.s * u;
        (t > after).then_some(t)
    }
}

pub(super) fn fit_quadratic(points: &[(f64, f64)]) -> Option<Quadratic> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let t0 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let s = points.iter().map(|p| (p.0 - t0).abs()).fold(0.0, f64::max);
    if s == 0.0 {
        return None;
    }
    // Normal equations in the basis 1, u, u².
    let mut a = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(t, y) in points {
        let u = (t - t0) / s;
        let basis = [1.0, u, u * u];
        for i in 0..3 {
            rhs[i] += basis[i] * y;
            for j in 0..3 {
                a[i][j] += basis[i] * basis[j];
            }
        }
    }
    let c = solve3(a, rhs)?;
    Some(Quadratic { t0, s, c })
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}
