//! Decay of `ψ - l` towards infinity.

use std::f64::consts::PI;

use super::{ls_slope, AnalysisError};
use crate::geometry::CurvilinearGrid;

const ANGLES: usize = 181;

/// `{R/8, R/4, R/2}`: far enough from the boundary bump, clear of the
/// truncation boundary.
pub fn dyadic_radii(r: f64) -> Vec<f64> {
    vec![r / 8.0, r / 4.0, r / 2.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub beta: f64,
    pub radii: Vec<f64>,
    /// `max_θ r^β |w(r, θ)|` per radius.
    pub sup_weighted: Vec<f64>,
    /// Ray angle and the fitted log-log slope of `|w|` (if fittable).
    pub ray_slopes: Vec<(f64, Option<f64>)>,
}

impl DecayFit {
    /// True when each sup statistic exceeds its predecessor by at most the
    /// relative `slack`.
    pub fn nonincreasing(&self, slack: f64) -> bool {
        self.sup_weighted.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
    }

    pub fn max_sup(&self) -> f64 {
        self.sup_weighted.iter().copied().fold(0.0, f64::max)
    }
}

fn sample(grid: &CurvilinearGrid, w: &[f64], r: f64, theta: f64) -> Option<f64> {
    let (xi, zeta) = grid.locate([r * theta.cos(), r * theta.sin()])?;
    Some(grid.interpolate(w, xi, zeta))
}

/// Samples `w = ψ - l` on half circles of the given radii and along the
/// given rays (angles in `(0, π)`).
pub fn decay_fit(
    grid: &CurvilinearGrid,
    w: &[f64],
    beta: f64,
    radii: &[f64],
    rays: &[f64],
) -> Result<DecayFit, AnalysisError> {
    let mut sup_weighted = Vec::new();
    let mut used = Vec::new();
    for &r in radii {
        let values: Vec<f64> =
            (0..ANGLES).filter_map(|k| sample(grid, w, r, PI * (k as f64 + 0.5) / ANGLES as f64)).collect();
        if values.is_empty() {
            continue;
        }
        used.push(r);
        sup_weighted.push(r.powf(beta) * values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if used.len() < 2 {
        return Err(AnalysisError::InsufficientRadii { found: used.len() });
    }
    let ray_slopes = rays
        .iter()
        .map(|&theta| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = used
                .iter()
                .filter_map(|&r| sample(grid, w, r, theta).filter(|v| v.abs() > 0.0).map(|v| (r.ln(), v.abs().ln())))
                .unzip();
            (theta, (xs.len() >= 2).then(|| ls_slope(&xs, &ys)))
        })
        .collect();
    Ok(DecayFit { beta, radii: used, sup_weighted, ray_slopes })
}
