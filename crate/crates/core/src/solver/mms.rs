//! Manufactured-solution convergence study of the linear discretization.

use serde::{Deserialize, Serialize};

use super::linear::{solve_linear, LinearEllipticProblem};
use super::sparse::LinearSolverOptions;
use super::SolverError;
use crate::geometry::CurvilinearGrid;

/// `u* = sin(x1) e^{-x2}` and its derivatives `[u, u1, u2, u11, u12, u22]`.
pub fn manufactured_solution(x: [f64; 2]) -> [f64; 6] {
    let (s, c, e) = (x[0].sin(), x[0].cos(), (-x[1]).exp());
    [s * e, c * e, -s * e, -s * e, -c * e, s * e]
}

/// Smooth, uniformly elliptic coefficients `[a11, a12, a22, b1, b2, b0]`
/// close to the background values.
pub fn manufactured_coefficients(x: [f64; 2]) -> [f64; 6] {
    [1.39 + 0.1 * x[0].sin(), 0.05 * x[0].cos() * (-x[1]).exp(), 1.4 + 0.1 * (0.5 * x[1]).cos(), 0.1, -0.2, -0.1]
}

/// Linear problem whose exact solution is [`manufactured_solution`].
pub fn manufactured_problem(grid: &CurvilinearGrid) -> (LinearEllipticProblem, Vec<f64>) {
    let n = grid.len();
    let mut p = LinearEllipticProblem::laplace(n);
    let mut exact = Vec::with_capacity(n);
    for (k, &x) in grid.nodes.iter().enumerate() {
        let [u, u1, u2, u11, u12, u22] = manufactured_solution(x);
        let [a11, a12, a22, b1, b2, b0] = manufactured_coefficients(x);
        p.a11[k] = a11;
        p.a12[k] = a12;
        p.a22[k] = a22;
        p.b1[k] = b1;
        p.b2[k] = b2;
        p.b0[k] = b0;
        p.rhs[k] = a11 * u11 + 2.0 * a12 * u12 + a22 * u22 + b1 * u1 + b2 * u2 + b0 * u;
        p.dirichlet[k] = u;
        exact.push(u);
    }
    (p, exact)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsLevel {
    pub nx: usize,
    pub nz: usize,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsReport {
    pub levels: Vec<MmsLevel>,
    /// `log2(e_k / e_{k+1})` between successive levels.
    pub orders: Vec<f64>,
}

/// Solves the manufactured problem on each grid (each a 2× refinement of
/// the previous one) and reports max-norm errors and observed orders.
pub fn run_mms(grids: &[CurvilinearGrid], opts: &LinearSolverOptions) -> Result<MmsReport, SolverError> {
    let mut levels = Vec::new();
    for grid in grids {
        let (p, exact) = manufactured_problem(grid);
        let (u, _) = solve_linear(grid, &p, opts)?;
        let max_error = u.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        levels.push(MmsLevel { nx: grid.nx, nz: grid.nz, max_error });
    }
    let orders = levels.windows(2).map(|w| (w[0].max_error / w[1].max_error).log2()).collect();
    Ok(MmsReport { levels, orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_rectangle_grid, Grading};

    #[test]
    fn rectangle_mms_is_second_order() {
        let grids: Vec<_> = [17, 33, 65]
            .iter()
            .map(|&n| generate_rectangle_grid([-2.0, 2.0], [0.0, 4.0], n, n, Grading::uniform()).unwrap())
            .collect();
        let r = run_mms(&grids, &LinearSolverOptions::default()).unwrap();
        for o in &r.orders {
            assert!((1.8..=2.2).contains(o), "order {o}");
        }
    }

    #[test]
    fn manufactured_derivatives_match_differences() {
        let x = [0.3, 0.7];
        let h = 1e-5;
        let d = manufactured_solution(x);
        let f = |x: [f64; 2]| manufactured_solution(x)[0];
        assert!((d[1] - (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h)).abs() < 1e-9);
        assert!((d[2] - (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h)).abs() < 1e-9);
        let g1 = |x: [f64; 2]| manufactured_solution(x)[1];
        assert!((d[4] - (g1([x[0], x[1] + h]) - g1([x[0], x[1] - h])) / (2.0 * h)).abs() < 1e-9);
    }
}
