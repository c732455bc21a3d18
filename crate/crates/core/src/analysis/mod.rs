//! Diagnostics over converged fields: weighted norms, barrier
//! inequalities, Euler residuals, streamline invariants, vorticity, decay
//! and truncation studies. Everything here is read-only over its inputs.

pub mod barrier;
pub mod decay;
pub mod norms;
pub mod report;
pub mod residuals;
pub mod streamline;
pub mod truncation;
pub mod vorticity;

pub use barrier::{apply_operator, barrier_check, BarrierCheck, BarrierJet, BarrierSpec, BarrierVariant};
pub use decay::{decay_fit, dyadic_radii, DecayFit};
pub use norms::{discrete_weighted_norm, WeightedNorm, WeightedNormSpec};
pub use report::{CheckEntry, DiagnosticsReport, ReportParseError, Verdict, REPORT_HEADER};
pub use residuals::{euler_residuals, EulerResiduals, ResidualNorm};
pub use streamline::{inflow_seeds, streamline_conservation, trace_streamline, StreamlineSummary, StreamlineTrace};
pub use truncation::{overlap_difference, truncation_study, OverlapDifference, TruncationStudy};
pub use vorticity::{vorticity_check, VorticityReport};

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{Corner, CurvilinearGrid};
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid diagnostic specification: {0}")]
    InvalidSpec(String),
    #[error("empty node selection: {0}")]
    EmptySelection(String),
    #[error("streamline hit a stagnation point near ({}, {})", point[0], point[1])]
    StagnationEncountered { point: [f64; 2] },
    #[error("streamline left the domain at ({}, {})", point[0], point[1])]
    LeftDomain { point: [f64; 2] },
    #[error("decay fit needs at least two radii inside the domain, found {found}")]
    InsufficientRadii { found: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Corners of the lower boundary with a genuine angle (not straight); the
/// flow stagnates there.
pub fn stagnation_corners(grid: &CurvilinearGrid) -> Vec<[f64; 2]> {
    let Some(p) = grid.profile() else { return Vec::new() };
    [Corner::Minus, Corner::Plus].into_iter().filter(|&c| (p.angle(c) - PI).abs() > 1e-9).map(|c| p.corner(c)).collect()
}

/// Balls removed from residual and vorticity scans.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Exclusion {
    pub centers: Vec<[f64; 2]>,
    pub radius: f64,
}

impl Exclusion {
    pub const DEFAULT_RADIUS: f64 = 1.0;

    pub fn none() -> Self {
        Self::default()
    }

    /// Balls of the default radius around the stagnation corners of `grid`.
    pub fn corners(grid: &CurvilinearGrid) -> Self {
        Self { centers: stagnation_corners(grid), radius: Self::DEFAULT_RADIUS }
    }

    pub fn excludes(&self, x: [f64; 2]) -> bool {
        self.centers.iter().any(|c| (x[0] - c[0]).hypot(x[1] - c[1]) < self.radius)
    }
}

/// Observed order `log(coarse/fine)/log(ratio)`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_and_slopes() {
        assert!((observed_order(4e-3, 1e-3, 2.0) - 2.0).abs() < 1e-12);
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-12);
    }
}
