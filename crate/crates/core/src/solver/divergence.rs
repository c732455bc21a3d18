//! Finite-volume discretization of `∇·(∇ψ/ρ) = B'(ψ)ρ - A'(ψ)ρ^γ/γ` in
//! mapped coordinates, used as a conservation cross-check of the
//! nondivergence solve. Densities are frozen at the previous iterate.

use rayon::prelude::*;

use super::fixed_point::{Background, FlowProblem};
use super::linear::interior_numbering;
use super::sparse::{solve_sparse, CsrMatrix, LinearSolverOptions};
use super::SolverError;
use crate::geometry::{CurvilinearGrid, InverseMetrics, Side};
use crate::thermo::{chi_max, solve_density, ThermoError};

/// `(J, ζ_x1, ζ_x2)` at computational point `(xi, zeta)`; on kink columns
/// the two one-sided values are averaged.
fn face_metrics(grid: &CurvilinearGrid, xi: f64, zeta: f64, on_kink: bool) -> (f64, f64, f64) {
    let eval = |side| {
        let d = grid.map_derivatives(xi, zeta, side);
        let m: InverseMetrics = d.inverse();
        (d.jacobian(), m.zeta_x1, m.zeta_x2)
    };
    if on_kink {
        let (a, b) = (eval(Side::Left), eval(Side::Right));
        (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1), 0.5 * (a.2 + b.2))
    } else {
        eval(Side::Left)
    }
}

/// Nodal density and source. Boundary nodes whose one-sided gradient is
/// supersonic are clamped just below the sonic limit.
fn nodal_state(problem: &FlowProblem<'_>, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64), SolverError> {
    let grid = problem.grid;
    let gamma = problem.stream.gamma();
    let grads = grid.gradient_field(psi);
    let rows: Vec<Result<(f64, f64, f64), SolverError>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.ij(k);
            let f = problem.stream.functions(psi[k]).map_err(ThermoError::from)?;
            let g = grads[k];
            let mut chi = 0.5 * (g[0] * g[0] + g[1] * g[1]);
            let boundary = grid.is_boundary(i, j);
            let d = match solve_density(chi, gamma, &f) {
                Ok(d) => d,
                Err(ThermoError::SupersonicChi { .. }) if boundary => {
                    chi = 0.999 * chi_max(gamma, f.a[0], f.b[0]);
                    solve_density(chi, gamma, &f)?
                }
                Err(ThermoError::SupersonicChi { .. }) => {
                    return Err(SolverError::SubsonicViolation { nodes: vec![(i, j)], min_margin: f64::NEG_INFINITY })
                }
                Err(e) => return Err(e.into()),
            };
            let source = f.b[1] * d.rho - f.a[1] * d.rho.powf(gamma) / gamma;
            let margin = if boundary { f64::INFINITY } else { d.sonic_margin };
            Ok((d.rho, source, margin))
        })
        .collect();
    let mut rho = Vec::with_capacity(grid.len());
    let mut src = Vec::with_capacity(grid.len());
    let mut margin = f64::INFINITY;
    for r in rows {
        let (a, b, m) = r?;
        rho.push(a);
        src.push(b);
        margin = margin.min(m);
    }
    Ok((rho, src, margin))
}

/// One Picard step in flux form: returns `ψ̃ - l`, the linear residual and
/// the interior sonic margin of the iterate.
pub fn solve_divergence_step(
    problem: &FlowProblem<'_>,
    bg: &Background,
    u: &[f64],
    opts: &LinearSolverOptions,
) -> Result<(Vec<f64>, f64, f64), SolverError> {
    let grid = problem.grid;
    let psi: Vec<f64> = u.iter().zip(&bg.l).map(|(u, l)| u + l).collect();
    let (rho, src, margin) = nodal_state(problem, &psi)?;
    let dirichlet: Vec<f64> = problem.boundary().boundary_trace(grid).iter().zip(&bg.l).map(|(g, l)| g + l).collect();
    let (index, nodes) = interior_numbering(grid);
    let (dxi, dz) = (grid.dxi, grid.dzeta);

    let rows: Vec<(Vec<(usize, f64)>, f64)> = nodes
        .par_iter()
        .map(|&k| {
            let (i, j) = grid.ij(k);
            let id = |di: isize, dj: isize| grid.idx((i as isize + di) as usize, (j as isize + dj) as usize);
            let (xi, zeta) = (grid.xi(i), grid.zeta(j));
            let kink = grid.is_kink_column(i);
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(16);

            // East and west faces: flux (J/ρ)(ψ_ξ + ζ_x1 ψ_ζ).
            for (dir, di) in [(1.0, 1isize), (-1.0, -1isize)] {
                let (jac, q, _) = face_metrics(grid, xi + 0.5 * di as f64 * dxi, zeta, false);
                let c = dir * jac / (0.5 * (rho[k] + rho[id(di, 0)])) / dxi;
                entries.push((id(di, 0), c * dir / dxi));
                entries.push((k, -c * dir / dxi));
                let w = c * q / (4.0 * dz);
                for col in [0, di] {
                    entries.push((id(col, 1), w));
                    entries.push((id(col, -1), -w));
                }
            }
            // North and south faces: flux (J/ρ)(ζ_x1 ψ_ξ + |∇ζ|² ψ_ζ).
            for (dir, dj) in [(1.0, 1isize), (-1.0, -1isize)] {
                let (jac, q, z2) = face_metrics(grid, xi, zeta + 0.5 * dj as f64 * dz, kink);
                let c = dir * jac / (0.5 * (rho[k] + rho[id(0, dj)])) / dz;
                let s = c * (q * q + z2 * z2);
                entries.push((id(0, dj), s * dir / dz));
                entries.push((k, -s * dir / dz));
                let w = c * q / (4.0 * dxi);
                for row in [0, dj] {
                    entries.push((id(1, row), w));
                    entries.push((id(-1, row), -w));
                }
            }
            let (jac, _, _) = face_metrics(grid, xi, zeta, kink);
            let mut rhs = jac * src[k];
            let mut row = Vec::with_capacity(entries.len());
            for (nb, w) in entries {
                if index[nb] == usize::MAX {
                    rhs -= w * dirichlet[nb];
                } else {
                    row.push((index[nb], w));
                }
            }
            (row, rhs)
        })
        .collect();
    let (rows, b): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let a = CsrMatrix::from_rows(rows);
    let sol = solve_sparse(&a, &b, opts)?;
    let mut t: Vec<f64> = dirichlet.iter().zip(&bg.l).map(|(d, l)| d - l).collect();
    for (n, &k) in nodes.iter().enumerate() {
        t[k] = sol.x[n] - bg.l[k];
    }
    Ok((t, sol.relative_residual, margin))
}
