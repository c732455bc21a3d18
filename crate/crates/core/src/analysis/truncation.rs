//! Agreement of solutions on nested truncated domains.

use rayon::prelude::*;

use super::{ls_slope, AnalysisError};
use crate::geometry::CurvilinearGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapDifference {
    pub r_small: f64,
    pub r_large: f64,
    pub max_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationStudy {
    pub differences: Vec<OverlapDifference>,
    /// Comparison window half-width (`R_min / 2`).
    pub window: f64,
}

impl TruncationStudy {
    /// Differences below this are rounding noise.
    pub const NEGLIGIBLE: f64 = 1e-13;

    pub fn strictly_decreasing(&self) -> bool {
        self.differences.windows(2).all(|w| w[1].max_diff < w[0].max_diff)
    }

    pub fn negligible(&self) -> bool {
        self.differences.iter().all(|d| d.max_diff <= Self::NEGLIGIBLE)
    }

    /// Pass when the differences shrink strictly, or vanish outright.
    pub fn passes(&self) -> bool {
        self.strictly_decreasing() || self.negligible()
    }

    /// Log-log slope of the differences against `R`, if at least two are
    /// resolvable.
    pub fn fitted_exponent(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .differences
            .iter()
            .filter(|d| d.max_diff > Self::NEGLIGIBLE)
            .map(|d| (d.r_small.ln(), d.max_diff.ln()))
            .unzip();
        (xs.len() >= 2).then(|| ls_slope(&xs, &ys))
    }
}

/// `max |ψ_large - ψ_small|` over the nodes of `small` with `|x1| <= window`
/// and `x2 <= window`; `large` is sampled by bilinear interpolation (exact
/// where the nodes coincide).
pub fn overlap_difference(
    small: (&CurvilinearGrid, &[f64]),
    large: (&CurvilinearGrid, &[f64]),
    window: f64,
) -> Result<f64, AnalysisError> {
    let (gs, ps) = small;
    let (gl, pl) = large;
    let mut max = 0.0f64;
    let mut count = 0;
    for (k, x) in gs.nodes.iter().enumerate() {
        if x[0].abs() > window || x[1] > window {
            continue;
        }
        let Some((xi, zeta)) = gl.locate(*x) else {
            return Err(AnalysisError::InvalidSpec(format!("node ({}, {}) is outside the larger domain", x[0], x[1])));
        };
        max = max.max((gl.interpolate(pl, xi, zeta) - ps[k]).abs());
        count += 1;
    }
    if count == 0 {
        return Err(AnalysisError::EmptySelection("comparison window holds no nodes".into()));
    }
    Ok(max)
}

/// Solves at each radius (in parallel) and compares consecutive pairs on
/// the window `R_min / 2`.
pub fn truncation_study<F>(radii: &[f64], solve: F) -> Result<TruncationStudy, AnalysisError>
where
    F: Fn(f64) -> Result<(CurvilinearGrid, Vec<f64>), AnalysisError> + Sync,
{
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AnalysisError::InvalidSpec(format!("radii {radii:?} must be increasing, at least two")));
    }
    let solutions = radii.par_iter().map(|&r| solve(r)).collect::<Result<Vec<_>, _>>()?;
    let window = radii[0] / 2.0;
    let differences = solutions
        .windows(2)
        .zip(radii.windows(2))
        .map(|(s, r)| {
            let max_diff = overlap_difference((&s[0].0, &s[0].1), (&s[1].0, &s[1].1), window)?;
            Ok(OverlapDifference { r_small: r[0], r_large: r[1], max_diff })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(TruncationStudy { differences, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_rectangle_grid, Grading};

    fn field(r: f64, f: impl Fn([f64; 2]) -> f64) -> (CurvilinearGrid, Vec<f64>) {
        let n = (r / 0.5) as usize;
        let g = generate_rectangle_grid([-r, r], [0.0, r], 2 * n + 1, n + 1, Grading::uniform()).unwrap();
        let v = g.nodes.iter().map(|&x| f(x)).collect();
        (g, v)
    }

    #[test]
    fn identical_fields_are_negligible() {
        let s = truncation_study(&[8.0, 16.0, 32.0], |r| Ok(field(r, |x| 0.1 * x[1]))).unwrap();
        assert!(s.negligible() && s.passes());
        assert_eq!(s.fitted_exponent(), None);
    }

    #[test]
    fn algebraic_convergence_is_detected() {
        // ψ_R = x2 + R^{-1/2} sin(x1): differences shrink like R^{-1/2}.
        let s = truncation_study(&[8.0, 16.0, 32.0], |r| Ok(field(r, |x| x[1] + r.powf(-0.5) * x[0].sin()))).unwrap();
        assert!(s.strictly_decreasing());
        assert!((s.fitted_exponent().unwrap() + 0.5).abs() < 0.05);
        let bad = truncation_study(&[8.0, 16.0, 32.0], |r| Ok(field(r, |x| x[1] + r * 1e-3 * x[0].sin()))).unwrap();
        assert!(!bad.passes());
        assert!(truncation_study(&[16.0, 8.0], |r| Ok(field(r, |_| 0.0))).is_err());
    }
}
