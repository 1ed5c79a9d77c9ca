use crate::model::{norm, DelayProblem, Trajectory};

use super::{pt_weights, QuadError};

/// Sub-steps per grid step used when re-integrating a trajectory.
pub const REFINEMENT: usize = 4;

/// Integral-equation defect `max_j ‖x_j − φ(0) − I^α[f(·, x, x(· − r))](t_j)‖`
/// over the nodes `j = 1..=n_total` of `traj`.
///
/// The integral is re-evaluated on a grid `REFINEMENT` times finer. Between
/// nodes `x` is the local cubic through four neighbouring nodes on `[0, T]`;
/// the delayed argument is read from `φ` wherever it falls in `[−r, 0]`.
/// A piecewise-linear reconstruction would reproduce the product-trapezoid
/// sums of the solvers and only measure their iteration tolerance.
pub fn caputo_residual(p: &DelayProblem, traj: &Trajectory) -> Result<f64, QuadError> {
    let grid = *traj.grid();
    let d = p.dim;
    if traj.dim() != d {
        return Err(QuadError::Mismatch(format!(
            "trajectory has dimension {}, problem has {d}",
            traj.dim()
        )));
    }
    if grid.delay() != p.delay {
        return Err(QuadError::Mismatch(format!(
            "trajectory delay {} differs from problem delay {}",
            grid.delay(),
            p.delay
        )));
    }
    let m = grid.steps_per_delay() as isize;
    let n = grid.n_total();
    let fine = REFINEMENT * n;
    let hf = grid.step() / REFINEMENT as f64;

    let mut samples = vec![0.0; (fine + 1) * d];
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    for i in 0..=fine {
        let j = (i / REFINEMENT) as isize;
        let s = i % REFINEMENT;
        let theta = s as f64 / REFINEMENT as f64;
        let t = grid.time(j) + s as f64 * hf;
        interpolate(traj, n, j, theta, &mut x);
        let jd = j - m;
        if jd < 0 || (jd == 0 && s == 0) {
            p.history
                .eval((grid.time(jd) + s as f64 * hf).min(0.0), &mut y)?;
        } else {
            interpolate(traj, n, jd, theta, &mut y);
        }
        p.eval_rhs(t, &x, &y, &mut samples[i * d..(i + 1) * d])?;
    }

    let w = pt_weights(p.alpha, hf, fine)?;
    let mut phi0 = vec![0.0; d];
    p.history.eval(0.0, &mut phi0)?;
    let mut integral = vec![0.0; d];
    let mut diff = vec![0.0; d];
    let mut worst = 0.0f64;
    for j in 1..=n {
        integral.iter_mut().for_each(|v| *v = 0.0);
        let row = REFINEMENT * j;
        w.accumulate(row, 0..row + 1, &samples, &mut integral);
        let xj = traj.at(j as isize);
        for k in 0..d {
            diff[k] = xj[k] - phi0[k] - integral[k];
        }
        worst = worst.max(norm(&diff));
    }
    Ok(worst)
}

/// Value at `t_j + θh` of the cubic through nodes `s..s + 3`, with the stencil
/// shifted to stay inside `0..=n`; linear when there are fewer than four nodes.
fn interpolate(traj: &Trajectory, n: usize, j: isize, theta: f64, out: &mut [f64]) {
    if theta == 0.0 {
        out.copy_from_slice(traj.at(j));
        return;
    }
    if n < 3 {
        let (a, b) = (traj.at(j), traj.at(j + 1));
        for (o, (u, v)) in out.iter_mut().zip(a.iter().zip(b)) {
            *o = u + theta * (v - u);
        }
        return;
    }
    let s = (j - 1).clamp(0, n as isize - 3);
    let u = (j - s) as f64 + theta;
    let basis = [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ];
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, l) in basis.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(traj.at(s + i as isize)) {
            *o += l * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{build_grid, ExprRhs, HistoryFunction};
    use crate::rhs_expr::{parse, ExprContext};

    fn problem(src: &str, phi: f64) -> DelayProblem {
        let f = parse(src, ExprContext::rhs(1)).unwrap();
        DelayProblem::new(
            0.5,
            1.0,
            2.0,
            HistoryFunction::Constant(vec![phi]),
            Arc::new(ExprRhs::new(vec![f])),
        )
    }

    #[test]
    fn constant_solution_of_the_homogeneous_equation() {
        let p = problem("0", 3.0);
        let grid = build_grid(1.0, 2.0, 50).unwrap();
        let traj = Trajectory::from_history(grid, &p.history).unwrap();
        assert!(caputo_residual(&p, &traj).unwrap() <= 1e-12);
    }

    #[test]
    fn perturbed_node_is_detected() {
        let p = problem("0", 3.0);
        let grid = build_grid(1.0, 2.0, 50).unwrap();
        let mut traj = Trajectory::from_history(grid, &p.history).unwrap();
        traj.set(37, &[4.0]);
        assert!(caputo_residual(&p, &traj).unwrap() >= 0.5);
    }

    #[test]
    fn exact_first_segment_of_the_pure_delay_problem() {
        // x = 1 + t^{1/2}/Γ(3/2) on [0, 1] solves D^{1/2} x = x(t − 1), φ ≡ 1.
        let p = problem("y", 1.0).with_horizon(1.0);
        for m in [50usize, 100, 200] {
            let grid = build_grid(1.0, 1.0, m).unwrap();
            let traj = Trajectory::from_fn(grid, 1, |_, t, x| {
                x[0] = 1.0 + t.max(0.0).sqrt() / 0.886_226_925_452_758
            })
            .unwrap();
            let r = caputo_residual(&p, &traj).unwrap();
            assert!(r <= 1e-12, "m = {m}: {r}");
        }
    }

    #[test]
    fn mismatched_trajectory_is_rejected() {
        let p = problem("0", 1.0);
        let grid = build_grid(0.5, 2.0, 10).unwrap();
        let traj = Trajectory::from_history(grid, &HistoryFunction::Constant(vec![1.0])).unwrap();
        assert!(matches!(
            caputo_residual(&p, &traj),
            Err(QuadError::Mismatch(_))
        ));
    }
}
