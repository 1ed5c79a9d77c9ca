use super::ModelError;

/// Uniform time grid aligned with the delay.
///
/// Nodes are `t_j` for `j = −m ..= n_total`, with `m` steps per delay and
/// `h = r / m`. Node times are computed as `q·r + s·h` where `j = q·m + s`,
/// so every segment boundary `t_{k·m}` is exactly the floating-point product
/// `k·r`, and the delayed index `j − m` always names a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    delay: f64,
    h: f64,
    m: usize,
    n_total: usize,
}

impl UniformGrid {
    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn steps_per_delay(&self) -> usize {
        self.m
    }

    /// Index of the last node; `t_{n_total}` is the grid horizon.
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Number of nodes including the history nodes.
    pub fn node_count(&self) -> usize {
        self.m + self.n_total + 1
    }

    pub fn time(&self, j: isize) -> f64 {
        let m = self.m as isize;
        let q = j.div_euclid(m);
        let s = j.rem_euclid(m);
        q as f64 * self.delay + s as f64 * self.h
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.n_total as isize)
    }

    /// Number of delay segments covering `[0, t_{n_total}]`; the last one may be partial.
    pub fn segment_count(&self) -> usize {
        self.n_total.div_ceil(self.m)
    }

    /// Node range `(first, last)` of segment `k`, clipped to the grid.
    pub fn segment_nodes(&self, k: usize) -> (usize, usize) {
        let first = k * self.m;
        let last = ((k + 1) * self.m).min(self.n_total);
        (first, last)
    }

    /// Same step and delay, horizon extended to cover `horizon`.
    pub fn extended_to(&self, horizon: f64) -> Result<UniformGrid, ModelError> {
        build_grid(self.delay, horizon.max(self.horizon()), self.m)
    }
}

/// Builds the grid for delay `r`, horizon `horizon` and `m` steps per delay.
///
/// `h = r / m`, and `n_total` is the smallest index whose node reaches the
/// horizon, so the grid may extend past `horizon` by less than one step.
pub fn build_grid(r: f64, horizon: f64, m: usize) -> Result<UniformGrid, ModelError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ModelError::Grid(format!(
            "delay must be positive and finite, got {r}"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ModelError::Grid(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    if m == 0 {
        return Err(ModelError::Grid(
            "steps per delay must be at least 1".into(),
        ));
    }
    let h = r / m as f64;
    let estimate = (horizon / h).ceil();
    if estimate > 1e9 {
        return Err(ModelError::Grid(format!(
            "grid would need {estimate:e} steps; reduce the horizon or steps per delay"
        )));
    }
    let mut grid = UniformGrid {
        delay: r,
        h,
        m,
        n_total: (estimate as usize).max(1),
    };
    while grid.time(grid.n_total as isize) < horizon {
        grid.n_total += 1;
    }
    while grid.n_total > 1 && grid.time(grid.n_total as isize - 1) >= horizon {
        grid.n_total -= 1;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_and_node_count() {
        let g = build_grid(1.0, 3.0, 4).unwrap();
        assert_eq!(g.step(), 0.25);
        assert_eq!(g.n_total(), 12);

        let g = build_grid(1.0, 2.1, 2).unwrap();
        assert_eq!(g.step(), 0.5);
        assert_eq!(g.n_total(), 5);
        assert_eq!(g.horizon(), 2.5);

        let g = build_grid(0.5, 0.3, 10).unwrap();
        assert_eq!(g.step(), 0.05);
        assert_eq!(g.n_total(), 6);
        assert_eq!(g.segment_count(), 1);
        assert_eq!(g.segment_nodes(0), (0, 6));
    }

    #[test]
    fn segment_boundaries_are_exact_multiples_of_the_delay() {
        for &r in &[1.0, 0.1, 0.3, 2.0 / 3.0, 1.7] {
            for &m in &[1usize, 3, 7, 10, 200] {
                let g = build_grid(r, 10.0 * r, m).unwrap();
                for k in 0..=(g.n_total() / m) {
                    let t = g.time((k * m) as isize);
                    assert_eq!(t, k as f64 * r, "r = {r}, m = {m}, k = {k}");
                }
                assert_eq!(g.time(-(m as isize)), -r);
                assert_eq!(g.time(0), 0.0);
            }
        }
    }

    #[test]
    fn horizon_is_reached_by_the_last_node_only() {
        for &(r, horizon, m) in &[(1.0, 2.0, 3), (0.7, 2.3, 9), (1.0, 1e-3, 5), (0.3, 0.9, 3)] {
            let g = build_grid(r, horizon, m).unwrap();
            assert!(g.horizon() >= horizon);
            assert!(g.time(g.n_total() as isize - 1) < horizon || g.n_total() == 1);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(-1.0, 1.0, 4).is_err());
        assert!(build_grid(1.0, 0.0, 4).is_err());
        assert!(build_grid(1.0, 1.0, 0).is_err());
        assert!(build_grid(f64::NAN, 1.0, 4).is_err());
    }
}
