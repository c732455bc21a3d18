//! Cutoff function and the Dirichlet trace `g` for `ψ - l`.

use crate::farfield::StreamLimitData;
use crate::geometry::{CurvilinearGrid, NodeTag};

/// `1` on `|s| <= d0`, `0` on `|s| >= d0 + 1`, quintic smoothstep between.
/// Returns value and first two derivatives.
pub fn cutoff_eta(s: f64, d0: f64) -> [f64; 3] {
    let t = s.abs() - d0;
    if t <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    if t >= 1.0 {
        return [0.0, 0.0, 0.0];
    }
    let sign = s.signum();
    let v = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let d1 = -30.0 * t * t * (1.0 - t) * (1.0 - t);
    let d2 = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    [v, sign * d1, d2]
}

/// `g(x) = -η(x2) ((1 - η(x1)) l(f(x1)) + η(x1) l(x2))` for a boundary
/// `x2 = f(x1)`.
#[derive(Debug, Clone, Copy)]
pub struct DirichletData<'a> {
    pub d0: f64,
    pub stream: &'a StreamLimitData,
}

impl<'a> DirichletData<'a> {
    pub fn new(d0: f64, stream: &'a StreamLimitData) -> Self {
        Self { d0, stream }
    }

    /// `g` at `x`, given the boundary height `f(x1)` of that column.
    pub fn g(&self, x: [f64; 2], bottom_height: f64) -> f64 {
        let e1 = cutoff_eta(x[0], self.d0)[0];
        let e2 = cutoff_eta(x[1], self.d0)[0];
        if e2 == 0.0 {
            return 0.0;
        }
        let mut inner = 0.0;
        if e1 < 1.0 {
            inner += (1.0 - e1) * self.stream.l(bottom_height);
        }
        if e1 > 0.0 {
            inner += e1 * self.stream.l(x[1]);
        }
        -e2 * inner
    }

    /// `g` at every boundary node of `grid`, zero elsewhere.
    pub fn boundary_trace(&self, grid: &CurvilinearGrid) -> Vec<f64> {
        (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                if grid.tag(i, j) == NodeTag::Interior {
                    0.0
                } else {
                    self.g(grid.nodes[k], grid.node(i, 0)[1])
                }
            })
            .collect()
    }

    /// Transfinite (Coons) interpolation of the boundary trace into the
    /// interior; used as the initial iterate for `ψ - l`.
    pub fn initial_guess(&self, grid: &CurvilinearGrid) -> Vec<f64> {
        let b = self.boundary_trace(grid);
        let (nx, nz) = (grid.nx, grid.nz);
        let at = |i: usize, j: usize| b[grid.idx(i, j)];
        (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                if grid.is_boundary(i, j) {
                    return b[k];
                }
                let s = i as f64 / (nx - 1) as f64;
                let t = j as f64 / (nz - 1) as f64;
                let edges = (1.0 - s) * at(0, j) + s * at(nx - 1, j) + (1.0 - t) * at(i, 0) + t * at(i, nz - 1);
                let corners = (1.0 - s) * (1.0 - t) * at(0, 0)
                    + s * (1.0 - t) * at(nx - 1, 0)
                    + (1.0 - s) * t * at(0, nz - 1)
                    + s * t * at(nx - 1, nz - 1);
                edges - corners
            })
            .collect()
    }
}
