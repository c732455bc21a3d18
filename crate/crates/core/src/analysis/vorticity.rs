//! Discrete vorticity `curl(m/ρ)` of recovered fields.

use super::{AnalysisError, Exclusion};
use crate::geometry::CurvilinearGrid;
use crate::solver::EulerFields;

#[derive(Debug, Clone, PartialEq)]
pub struct VorticityReport {
    pub max_abs: f64,
    pub location: [f64; 2],
    pub rms: f64,
    pub nodes: usize,
}

/// `∂x1(m2/ρ) - ∂x2(m1/ρ)` at interior nodes outside the exclusion balls.
pub fn vorticity_check(
    grid: &CurvilinearGrid,
    fields: &EulerFields,
    exclusion: &Exclusion,
) -> Result<VorticityReport, AnalysisError> {
    let u1: Vec<f64> = fields.m1.iter().zip(&fields.rho).map(|(m, r)| m / r).collect();
    let u2: Vec<f64> = fields.m2.iter().zip(&fields.rho).map(|(m, r)| m / r).collect();
    let mut out = VorticityReport { max_abs: 0.0, location: [f64::NAN; 2], rms: 0.0, nodes: 0 };
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        if grid.is_boundary(i, j) || exclusion.excludes(grid.nodes[k]) {
            continue;
        }
        let w = grid.gradient(&u2, i, j)[0] - grid.gradient(&u1, i, j)[1];
        out.nodes += 1;
        out.rms += w * w;
        if w.abs() >= out.max_abs {
            out.max_abs = w.abs();
            out.location = grid.nodes[k];
        }
    }
    if out.nodes == 0 {
        return Err(AnalysisError::EmptySelection("no interior nodes outside the excluded balls".into()));
    }
    out.rms = (out.rms / out.nodes as f64).sqrt();
    Ok(out)
}
