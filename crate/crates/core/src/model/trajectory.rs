use super::{HistoryFunction, ModelError, UniformGrid};

/// Sampled solution `x_j` at the nodes `j = −m ..= n_total` of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: UniformGrid,
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    /// History nodes filled from `φ`, every later node set to `φ(0)`.
    pub fn from_history(grid: UniformGrid, history: &HistoryFunction) -> Result<Self, ModelError> {
        let dim = history.dim();
        let mut values = vec![0.0; grid.node_count() * dim];
        let m = grid.steps_per_delay() as isize;
        for j in -m..=0 {
            let at = ((j + m) as usize) * dim;
            history.eval(grid.time(j), &mut values[at..at + dim])?;
        }
        let origin = m as usize * dim;
        for at in (origin + dim..values.len()).step_by(dim) {
            values.copy_within(origin..origin + dim, at);
        }
        Ok(Trajectory { grid, dim, values })
    }

    /// Builds a trajectory from `f(j, t_j, out)`.
    pub fn from_fn<F>(grid: UniformGrid, dim: usize, mut f: F) -> Result<Self, ModelError>
    where
        F: FnMut(isize, f64, &mut [f64]),
    {
        let mut values = vec![0.0; grid.node_count() * dim];
        let m = grid.steps_per_delay() as isize;
        for (i, chunk) in values.chunks_mut(dim).enumerate() {
            let j = i as isize - m;
            f(j, grid.time(j), chunk);
        }
        Self::from_flat(grid, dim, values)
    }

    /// Node-major values, `dim` entries per node starting at `j = −m`.
    pub fn from_flat(grid: UniformGrid, dim: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::Dimension {
                expected: 1,
                found: 0,
            });
        }
        if values.len() != grid.node_count() * dim {
            return Err(ModelError::Dimension {
                expected: grid.node_count() * dim,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let j = (i / dim) as isize - grid.steps_per_delay() as isize;
            return Err(ModelError::Grid(format!(
                "trajectory value at node {j} (t = {}) is not finite",
                grid.time(j)
            )));
        }
        Ok(Trajectory { grid, dim, values })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `x_j` for `−m ≤ j ≤ n_total`.
    pub fn at(&self, j: isize) -> &[f64] {
        let at = self.offset(j);
        &self.values[at..at + self.dim]
    }

    pub(crate) fn set(&mut self, j: isize, x: &[f64]) {
        let at = self.offset(j);
        self.values[at..at + self.dim].copy_from_slice(x);
    }

    pub fn time(&self, j: isize) -> f64 {
        self.grid.time(j)
    }

    /// `(j, t_j, x_j)` over every node in order.
    pub fn nodes(&self) -> impl Iterator<Item = (isize, f64, &[f64])> + '_ {
        let m = self.grid.steps_per_delay() as isize;
        self.values.chunks(self.dim).enumerate().map(move |(i, x)| {
            let j = i as isize - m;
            (j, self.grid.time(j), x)
        })
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// Copy with every node after `n_total` dropped.
    pub fn truncated(&self, n_total: usize) -> Result<Trajectory, ModelError> {
        if n_total == 0 || n_total > self.grid.n_total() {
            return Err(ModelError::Grid(format!(
                "cannot truncate {} steps to {n_total}",
                self.grid.n_total()
            )));
        }
        let grid = super::build_grid(
            self.grid.delay(),
            self.grid.time(n_total as isize),
            self.grid.steps_per_delay(),
        )?;
        debug_assert_eq!(grid.n_total(), n_total);
        let len = grid.node_count() * self.dim;
        Ok(Trajectory {
            grid,
            dim: self.dim,
            values: self.values[..len].to_vec(),
        })
    }

    fn offset(&self, j: isize) -> usize {
        let i = j + self.grid.steps_per_delay() as isize;
        assert!(
            i >= 0 && (i as usize) < self.grid.node_count(),
            "node {j} outside the grid"
        );
        i as usize * self.dim
    }
}
