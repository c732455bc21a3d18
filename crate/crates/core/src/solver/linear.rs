//! Linear elliptic problems `a_ij u_ij + b_i u_i + b0 u = rhs` with
//! Dirichlet data, discretized with the grid stencils.

use rayon::prelude::*;

use super::sparse::{solve_sparse, CsrMatrix, LinearSolution, LinearSolverOptions};
use super::SolverError;
use crate::geometry::{CurvilinearGrid, Stencil};

/// Node coefficient fields. Boundary entries of the coefficient fields are
/// ignored; `dirichlet` is only read on boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEllipticProblem {
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub b0: Vec<f64>,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<f64>,
}

impl LinearEllipticProblem {
    /// Laplace operator with zero data.
    pub fn laplace(n: usize) -> Self {
        Self {
            a11: vec![1.0; n],
            a12: vec![0.0; n],
            a22: vec![1.0; n],
            b1: vec![0.0; n],
            b2: vec![0.0; n],
            b0: vec![0.0; n],
            rhs: vec![0.0; n],
            dirichlet: vec![0.0; n],
        }
    }

    /// Weights of the discrete operator on the 3×3 neighbourhood.
    pub fn weights(&self, st: &Stencil, k: usize) -> [f64; 9] {
        let mut w = [0.0; 9];
        for (m, wm) in w.iter_mut().enumerate() {
            *wm = self.a11[k] * st.dx1x1[m]
                + 2.0 * self.a12[k] * st.dx1x2[m]
                + self.a22[k] * st.dx2x2[m]
                + self.b1[k] * st.dx1[m]
                + self.b2[k] * st.dx2[m];
        }
        w[Stencil::CENTER] += self.b0[k];
        w
    }

    /// Discrete operator applied to `u` at an interior node, minus `rhs`.
    pub fn residual_at(&self, grid: &CurvilinearGrid, u: &[f64], i: usize, j: usize) -> f64 {
        let k = grid.idx(i, j);
        let w = self.weights(&grid.stencil(i, j), k);
        let mut s = 0.0;
        for (m, wm) in w.iter().enumerate() {
            let (di, dj) = Stencil::offset(m);
            s += wm * u[grid.idx((i as isize + di) as usize, (j as isize + dj) as usize)];
        }
        s - self.rhs[k]
    }

    fn check_ellipticity(&self, grid: &CurvilinearGrid) -> Result<(), SolverError> {
        for k in 0..grid.len() {
            let (i, j) = grid.ij(k);
            if grid.is_boundary(i, j) {
                continue;
            }
            let det = self.a11[k] * self.a22[k] - self.a12[k] * self.a12[k];
            if !(det > 0.0 && self.a11[k] > 0.0) {
                return Err(SolverError::NotElliptic { i, j, determinant: det });
            }
        }
        Ok(())
    }
}

/// Maps interior nodes to unknown indices.
pub(super) fn interior_numbering(grid: &CurvilinearGrid) -> (Vec<usize>, Vec<usize>) {
    let mut index = vec![usize::MAX; grid.len()];
    let mut nodes = Vec::new();
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        if !grid.is_boundary(i, j) {
            index[k] = nodes.len();
            nodes.push(k);
        }
    }
    (index, nodes)
}

/// Solves the discrete problem; returns the full node field (Dirichlet
/// values on the boundary) and the linear-solve summary.
pub fn solve_linear(
    grid: &CurvilinearGrid,
    problem: &LinearEllipticProblem,
    opts: &LinearSolverOptions,
) -> Result<(Vec<f64>, LinearSolution), SolverError> {
    problem.check_ellipticity(grid)?;
    let (index, nodes) = interior_numbering(grid);
    let rows: Vec<(Vec<(usize, f64)>, f64)> = nodes
        .par_iter()
        .map(|&k| {
            let (i, j) = grid.ij(k);
            let w = problem.weights(&grid.stencil(i, j), k);
            let mut row = Vec::with_capacity(9);
            let mut rhs = problem.rhs[k];
            for (m, &wm) in w.iter().enumerate() {
                if wm == 0.0 {
                    continue;
                }
                let (di, dj) = Stencil::offset(m);
                let nb = grid.idx((i as isize + di) as usize, (j as isize + dj) as usize);
                if index[nb] == usize::MAX {
                    rhs -= wm * problem.dirichlet[nb];
                } else {
                    row.push((index[nb], wm));
                }
            }
            (row, rhs)
        })
        .collect();
    let (rows, b): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let a = CsrMatrix::from_rows(rows);
    let sol = solve_sparse(&a, &b, opts)?;
    let mut u = problem.dirichlet.clone();
    for (n, &k) in nodes.iter().enumerate() {
        u[k] = sol.x[n];
    }
    Ok((u, sol))
}
