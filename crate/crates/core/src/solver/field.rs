//! Node fields on a curvilinear grid.

use crate::geometry::CurvilinearGrid;

/// Values at every node of `grid`, stored row by row (`j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<'g> {
    pub grid: &'g CurvilinearGrid,
    pub values: Vec<f64>,
}

impl<'g> GridField<'g> {
    pub fn new(grid: &'g CurvilinearGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "field length must match the grid");
        Self { grid, values }
    }

    pub fn zeros(grid: &'g CurvilinearGrid) -> Self {
        Self::new(grid, vec![0.0; grid.len()])
    }

    /// Samples `f` at the physical node coordinates.
    pub fn from_fn(grid: &'g CurvilinearGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::new(grid, grid.nodes.iter().map(|&x| f(x)).collect())
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn gradient(&self, i: usize, j: usize) -> [f64; 2] {
        self.grid.gradient(&self.values, i, j)
    }

    /// `[u_x1, u_x2, u_x1x1, u_x1x2, u_x2x2]` at an interior node.
    pub fn derivatives(&self, i: usize, j: usize) -> [f64; 5] {
        self.grid.derivatives(&self.values, i, j)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridField<'_>) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_rectangle_grid, Grading};

    #[test]
    fn quadratic_derivatives_are_exact() {
        let grid = generate_rectangle_grid([0.0, 1.0], [0.0, 2.0], 11, 21, Grading::uniform()).unwrap();
        let f = GridField::from_fn(&grid, |x| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1]);
        let d = f.derivatives(4, 7);
        let [x1, x2] = grid.node(4, 7);
        let want = [2.0 * x1 + 3.0 * x2, 3.0 * x1 - 2.0 * x2, 2.0, 3.0, -2.0];
        for k in 0..5 {
            assert!((d[k] - want[k]).abs() < 1e-10);
        }
        assert!((f.gradient(0, 0)[0] - 0.0).abs() < 1e-12);
        assert_eq!(f.max_abs_diff(&f), 0.0);
    }
}
