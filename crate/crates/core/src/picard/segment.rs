use crate::fracquad::{pt_weights, ConvolutionWeights};
use crate::model::{
    estimate_lipschitz, norm, validate_problem, DelayProblem, Lipschitz, Trajectory,
};

use super::{
    choose_beta, weighted, InitialGuess, PicardConfig, PicardError, SegmentReport, StopRule,
    WeightedNorm, CONTRACTION_SLACK,
};

/// Trajectory and per-segment reports from [`solve_picard`].
#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub reports: Vec<SegmentReport>,
}

/// Result of [`extend_horizon`].
#[derive(Debug, Clone)]
pub struct Extension {
    pub solution: PicardSolution,
    /// Sup-norm difference from the original trajectory on the common nodes.
    pub coincidence_defect: f64,
}

/// Data fixed while iterating on one segment.
struct Segment<'a> {
    p: &'a DelayProblem,
    w: &'a ConvolutionWeights,
    k: usize,
    first: usize,
    last: usize,
    times: Vec<f64>,
    /// `x_{j−m}` for `j = first..=last`, node-major.
    delayed: Vec<f64>,
    /// `φ(0) + Σ_{i ≤ first} w[j][i] f_i` for `j = first+1..=last`.
    fixed: Vec<f64>,
}

impl<'a> Segment<'a> {
    /// `fs` holds `f` at nodes `0..=first`, node-major.
    fn new(
        p: &'a DelayProblem,
        w: &'a ConvolutionWeights,
        known: &Trajectory,
        fs: &[f64],
        k: usize,
    ) -> Result<Self, PicardError> {
        let grid = known.grid();
        let d = p.dim;
        let m = grid.steps_per_delay();
        let (first, last) = grid.segment_nodes(k);
        debug_assert!(fs.len() >= (first + 1) * d);
        let times = (first..=last).map(|j| grid.time(j as isize)).collect();
        let mut delayed = Vec::with_capacity((last - first + 1) * d);
        for j in first..=last {
            delayed.extend_from_slice(known.at(j as isize - m as isize));
        }
        let mut phi0 = vec![0.0; d];
        p.history.eval(0.0, &mut phi0)?;
        let mut fixed = Vec::with_capacity((last - first) * d);
        let mut acc = vec![0.0; d];
        for j in first + 1..=last {
            acc.iter_mut().for_each(|a| *a = 0.0);
            w.accumulate(j, 0..first + 1, fs, &mut acc);
            fixed.extend(acc.iter().zip(&phi0).map(|(a, p0)| a + p0));
        }
        Ok(Segment {
            p,
            w,
            k,
            first,
            last,
            times,
            delayed,
            fixed,
        })
    }

    fn len(&self) -> usize {
        self.last - self.first + 1
    }

    /// `f` at nodes `first+1..=last` for node-major segment values.
    fn live_samples(&self, values: &[f64]) -> Result<Vec<f64>, PicardError> {
        let d = self.p.dim;
        let mut out = vec![0.0; self.len() * d];
        for i in 1..self.len() {
            let node = self.first + i;
            let x = &values[i * d..(i + 1) * d];
            if x.iter().any(|v| !v.is_finite()) {
                return Err(PicardError::NonFinite {
                    segment: self.k,
                    node,
                });
            }
            let y = &self.delayed[i * d..(i + 1) * d];
            self.p
                .eval_rhs(self.times[i], x, y, &mut out[i * d..(i + 1) * d])
                .map_err(|source| PicardError::Rhs {
                    segment: self.k,
                    node,
                    source,
                })?;
        }
        Ok(out)
    }

    /// Operator image of node-major segment values; node `first` is copied.
    fn apply(&self, values: &[f64]) -> Result<Vec<f64>, PicardError> {
        let d = self.p.dim;
        let live = self.live_samples(values)?;
        let mut image = vec![0.0; self.len() * d];
        image[..d].copy_from_slice(&values[..d]);
        for i in 1..self.len() {
            let n = self.first + i;
            let out = &mut image[i * d..(i + 1) * d];
            out.copy_from_slice(&self.fixed[(i - 1) * d..i * d]);
            for j in 1..=i {
                let wj = self.w.weight(n, self.first + j);
                for (o, v) in out.iter_mut().zip(&live[j * d..(j + 1) * d]) {
                    *o += wj * v;
                }
            }
        }
        Ok(image)
    }

    /// Weighted and sup distances between two node-major segment samples.
    fn distances(&self, log_w: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
        let d = self.p.dim;
        let mut diff = vec![0.0; d];
        let (mut wd, mut sd) = (0.0f64, 0.0f64);
        for (i, lw) in log_w.iter().enumerate() {
            for k in 0..d {
                diff[k] = a[i * d + k] - b[i * d + k];
            }
            let n = norm(&diff);
            sd = sd.max(n);
            wd = wd.max(weighted(n, *lw));
        }
        (wd, sd)
    }

    /// `max L` over the segment and whether it was sampled.
    fn max_lipschitz(&self, known: &Trajectory) -> Result<(f64, bool), PicardError> {
        let d = self.p.dim;
        match &self.p.lipschitz {
            Lipschitz::Constant(l) => Ok((*l, false)),
            Lipschitz::Function(l) => {
                let mut worst = 0.0f64;
                for (i, &t) in self.times.iter().enumerate() {
                    let v = l(t, &self.delayed[i * d..(i + 1) * d]);
                    if v.is_nan() {
                        return Ok((f64::NAN, false));
                    }
                    worst = worst.max(v);
                }
                Ok((worst, false))
            }
            Lipschitz::Estimate => {
                // Box: range of the solution so far, widened on both sides.
                let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
                for (j, _, x) in known.nodes() {
                    if j > self.first as isize {
                        break;
                    }
                    for (b, v) in bounds.iter_mut().zip(x) {
                        b.0 = b.0.min(*v);
                        b.1 = b.1.max(*v);
                    }
                }
                for b in &mut bounds {
                    let pad = (b.1 - b.0).max(1.0);
                    *b = (b.0 - pad, b.1 + pad);
                }
                let stride = (self.len() / 8).max(1);
                let y_samples: Vec<Vec<f64>> = (0..self.len())
                    .step_by(stride)
                    .chain(std::iter::once(self.len() - 1))
                    .map(|i| self.delayed[i * d..(i + 1) * d].to_vec())
                    .collect();
                let segment = (self.times[0], self.times[self.len() - 1]);
                let l = estimate_lipschitz(self.p, &bounds, segment, &y_samples)?;
                Ok((l, true))
            }
        }
    }

    fn iterate(
        &self,
        known: &Trajectory,
        cfg: &PicardConfig,
    ) -> Result<(Vec<f64>, SegmentReport), PicardError> {
        let d = self.p.dim;
        let (max_l, estimated) = self.max_lipschitz(known)?;
        if !(max_l >= 0.0 && max_l.is_finite()) {
            return Err(PicardError::Beta {
                segment: self.k,
                max_l,
            });
        }
        let beta = choose_beta(max_l, cfg.margin);
        let norm_k = WeightedNorm::new(
            self.p.alpha,
            beta,
            (self.times[0], self.times[self.len() - 1]),
        )?;
        let log_w = norm_k.log_weights(&self.times)?;

        let start = known.at(self.first as isize);
        let mut current = vec![0.0; self.len() * d];
        current[..d].copy_from_slice(start);
        if cfg.initial == InitialGuess::ConstantExtension {
            for i in 1..self.len() {
                current[i * d..(i + 1) * d].copy_from_slice(start);
            }
        }

        let mut distances = Vec::new();
        let mut iterations = 0;
        let sup_distance = loop {
            let next = self.apply(&current)?;
            iterations += 1;
            let (wd, sd) = self.distances(&log_w, &next, &current);
            distances.push(wd);
            current = next;
            let scale = current.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let sup_ok = cfg.stop == StopRule::Weighted || sd <= cfg.tol * scale;
            if wd <= cfg.tol && sup_ok {
                break sd;
            }
            if iterations >= cfg.max_iter {
                return Err(PicardError::NonConvergence {
                    segment: self.k,
                    iterations,
                    final_distance: wd,
                    sup_distance: sd,
                });
            }
        };

        let check = self.apply(&current)?;
        let (defect, _) = self.distances(&log_w, &check, &current);

        // Ratios are only meaningful above round-off in the iterates.
        let scale = current.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let floor = 1e-13 * scale;
        let contraction_estimate = distances
            .windows(2)
            .filter(|p| p[0] > floor && p[1] > floor)
            .map(|p| p[1] / p[0])
            .fold(0.0f64, f64::max);

        let report = SegmentReport {
            k: self.k,
            t_start: self.times[0],
            t_end: self.times[self.len() - 1],
            beta_k: beta,
            max_l,
            lipschitz_estimated: estimated,
            iterations,
            initial_distance: distances[0],
            final_distance: *distances.last().expect("at least one iteration"),
            final_sup_distance: sup_distance,
            contraction_estimate,
            contraction_bound: max_l / beta + CONTRACTION_SLACK,
            fixed_point_defect: defect,
        };
        Ok((current, report))
    }
}

/// `f` at nodes `0..=last`, node-major.
fn rhs_samples(p: &DelayProblem, traj: &Trajectory, last: usize) -> Result<Vec<f64>, PicardError> {
    let d = p.dim;
    let m = traj.grid().steps_per_delay() as isize;
    let mut fs = vec![0.0; (last + 1) * d];
    for j in 0..=last {
        let jj = j as isize;
        p.eval_rhs(
            traj.time(jj),
            traj.at(jj),
            traj.at(jj - m),
            &mut fs[j * d..(j + 1) * d],
        )
        .map_err(|source| PicardError::Rhs {
            segment: j / m as usize,
            node: j,
            source,
        })?;
    }
    Ok(fs)
}

fn check_known(p: &DelayProblem, known: &Trajectory, k: usize) -> Result<(), PicardError> {
    if known.dim() != p.dim || known.grid().delay() != p.delay {
        return Err(PicardError::Input(
            "trajectory does not belong to the problem".into(),
        ));
    }
    if k >= known.grid().segment_count() {
        return Err(PicardError::Input(format!(
            "segment {k} is outside the grid ({} segments)",
            known.grid().segment_count()
        )));
    }
    Ok(())
}

/// The segment operator applied once.
///
/// `known` must hold the solution on nodes `j ≤ k·m`; later nodes are not read.
/// `candidate[i]` is the value at node `k·m + i` and `candidate[0]` must equal
/// the known value there.
pub fn apply_operator(
    p: &DelayProblem,
    known: &Trajectory,
    k: usize,
    candidate: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, PicardError> {
    check_known(p, known, k)?;
    let grid = known.grid();
    let (first, last) = grid.segment_nodes(k);
    if candidate.len() != last - first + 1 || candidate.iter().any(|c| c.len() != p.dim) {
        return Err(PicardError::Input(format!(
            "candidate must have {} values of dimension {}",
            last - first + 1,
            p.dim
        )));
    }
    if candidate[0].as_slice() != known.at(first as isize) {
        return Err(PicardError::Input(
            "candidate does not start at the known value".into(),
        ));
    }
    let w = pt_weights(p.alpha, grid.step(), grid.n_total())?;
    let fs = rhs_samples(p, known, first)?;
    let seg = Segment::new(p, &w, known, &fs, k)?;
    let flat: Vec<f64> = candidate.iter().flatten().copied().collect();
    let image = seg.apply(&flat)?;
    Ok(image.chunks(p.dim).map(<[f64]>::to_vec).collect())
}

/// Picard iteration on segment `k` given the solution on nodes `j ≤ k·m`.
pub fn solve_segment(
    p: &DelayProblem,
    known: &Trajectory,
    k: usize,
    cfg: &PicardConfig,
) -> Result<(Vec<Vec<f64>>, SegmentReport), PicardError> {
    cfg.check()?;
    check_known(p, known, k)?;
    let grid = known.grid();
    let first = grid.segment_nodes(k).0;
    let w = pt_weights(p.alpha, grid.step(), grid.n_total())?;
    let fs = rhs_samples(p, known, first)?;
    let seg = Segment::new(p, &w, known, &fs, k)?;
    let (values, report) = seg.iterate(known, cfg)?;
    Ok((values.chunks(p.dim).map(<[f64]>::to_vec).collect(), report))
}

/// Solves on `[−r, T_grid]` segment by segment with `m` steps per delay.
pub fn solve_picard(
    p: &DelayProblem,
    m: usize,
    cfg: &PicardConfig,
) -> Result<PicardSolution, PicardError> {
    validate_problem(p)?;
    cfg.check()?;
    let grid = p.grid(m)?;
    let d = p.dim;
    let w = pt_weights(p.alpha, grid.step(), grid.n_total())?;
    let mut traj = Trajectory::from_history(grid, &p.history)?;
    let mut fs = rhs_samples(p, &traj, 0)?;
    let mut reports = Vec::with_capacity(grid.segment_count());
    for k in 0..grid.segment_count() {
        let seg = Segment::new(p, &w, &traj, &fs, k)?;
        let (values, report) = seg.iterate(&traj, cfg)?;
        for (i, x) in values.chunks(d).enumerate().skip(1) {
            traj.set((seg.first + i) as isize, x);
        }
        let more = seg.live_samples(&values)?;
        fs.extend_from_slice(&more[d..]);
        debug_assert_eq!(fs.len(), (seg.last + 1) * d);
        reports.push(report);
    }
    Ok(PicardSolution {
        trajectory: traj,
        reports,
    })
}

/// Re-solves on the longer horizon `t_new` and checks that the new run
/// reproduces `traj` within `10·tol` on the common nodes.
pub fn extend_horizon(
    p: &DelayProblem,
    traj: &Trajectory,
    t_new: f64,
    cfg: &PicardConfig,
) -> Result<Extension, PicardError> {
    if !(t_new > p.horizon) {
        return Err(PicardError::Input(format!(
            "new horizon {t_new} must exceed {}",
            p.horizon
        )));
    }
    let longer = p.clone().with_horizon(t_new);
    let solution = solve_picard(&longer, traj.grid().steps_per_delay(), cfg)?;
    let new = &solution.trajectory;
    if new.grid().step() != traj.grid().step() || new.dim() != traj.dim() {
        return Err(PicardError::Input(
            "trajectory was not produced on this problem's grid".into(),
        ));
    }
    let mut defect = 0.0f64;
    let mut diff = vec![0.0; traj.dim()];
    for j in 0..=traj.grid().n_total() as isize {
        for (o, (a, b)) in diff.iter_mut().zip(traj.at(j).iter().zip(new.at(j))) {
            *o = a - b;
        }
        defect = defect.max(norm(&diff));
    }
    let allowed = 10.0 * cfg.tol;
    if defect > allowed {
        return Err(PicardError::Coincidence { defect, allowed });
    }
    Ok(Extension {
        solution,
        coincidence_defect: defect,
    })
}
