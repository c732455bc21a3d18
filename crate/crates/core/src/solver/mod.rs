//! Linearized fixed-point solver for the stream function on a truncated
//! grid, and recovery of the Euler fields.

mod boundary;
mod divergence;
mod field;
mod fixed_point;
mod linear;
mod mms;
mod recover;
pub mod sparse;

pub use boundary::{cutoff_eta, DirichletData};
pub use divergence::solve_divergence_step;
pub use field::GridField;
pub use fixed_point::{
    assemble_linearized, fixed_point_from, fixed_point_solve, nonlinear_residual, Background, Discretization,
    FlowProblem, FlowSolution, IterationRecord, IterationScheme, ResidualSummary, SolveReport, SolverOptions,
};
pub use linear::{solve_linear, LinearEllipticProblem};
pub use mms::{manufactured_coefficients, manufactured_problem, manufactured_solution, run_mms, MmsLevel, MmsReport};
pub use recover::{recover_euler_fields, EulerFields};
pub use sparse::{LinearMethod, LinearSolution, LinearSolverOptions};

use thiserror::Error;

use crate::thermo::ThermoError;
use sparse::LinearError;

fn node_list(nodes: &[(usize, usize)]) -> String {
    let shown: Vec<String> = nodes.iter().take(8).map(|(i, j)| format!("({i}, {j})")).collect();
    let more = nodes.len().saturating_sub(8);
    if more > 0 {
        format!("{} and {more} more", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("flow is not subsonic at {} node(s): {}", nodes.len(), node_list(nodes))]
    SubsonicViolation { nodes: Vec<(usize, usize)>, min_margin: f64 },
    #[error("quadrature state at s = {s} leaves the subsonic branch at node ({i}, {j})")]
    QuadratureStateSupersonic { i: usize, j: usize, s: f64 },
    #[error("coefficients are not elliptic at node ({i}, {j}): determinant {determinant:.3e}")]
    NotElliptic { i: usize, j: usize, determinant: f64 },
    #[error("linear solve diverged: relative residual {residual:.3e} (target {target:.1e})")]
    LinearSolveDiverged { residual: f64, target: f64 },
    #[error("linear system is ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("no convergence after {iterations} iterations (last update {update:.3e})")]
    MaxIterationsExceeded { iterations: usize, update: f64 },
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

impl From<LinearError> for SolverError {
    fn from(e: LinearError) -> Self {
        match e {
            LinearError::Diverged { residual, target } => SolverError::LinearSolveDiverged { residual, target },
            LinearError::IllConditioned(m) => SolverError::IllConditioned(m),
        }
    }
}
