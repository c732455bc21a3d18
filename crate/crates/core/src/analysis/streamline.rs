//! Streamline tracing and the two streamline invariants `p/ρ^γ` and the
//! Bernoulli constant `|m|²/(2ρ²) + γp/((γ-1)ρ)`.

use super::{stagnation_corners, AnalysisError};
use crate::geometry::CurvilinearGrid;
use crate::solver::EulerFields;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamlineTrace {
    pub seed: [f64; 2],
    pub points: Vec<[f64; 2]>,
    /// `(max - min)/max|·|` along the trace.
    pub entropy_variation: f64,
    pub bernoulli_variation: f64,
    /// Absolute variation of `ψ` itself (tracing error).
    pub psi_variation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamlineSummary {
    pub traces: Vec<StreamlineTrace>,
    pub max_entropy_variation: f64,
    pub max_bernoulli_variation: f64,
    pub max_psi_variation: f64,
}

struct Sampler<'a> {
    grid: &'a CurvilinearGrid,
    psi: &'a [f64],
    fields: &'a EulerFields,
    gamma: f64,
    m_floor: f64,
}

impl Sampler<'_> {
    fn locate(&self, x: [f64; 2]) -> Result<(f64, f64), AnalysisError> {
        self.grid.locate(x).ok_or(AnalysisError::LeftDomain { point: x })
    }

    fn direction(&self, x: [f64; 2]) -> Result<[f64; 2], AnalysisError> {
        let (xi, zeta) = self.locate(x)?;
        let m1 = self.grid.interpolate(&self.fields.m1, xi, zeta);
        let m2 = self.grid.interpolate(&self.fields.m2, xi, zeta);
        let norm = m1.hypot(m2);
        if norm <= self.m_floor {
            return Err(AnalysisError::StagnationEncountered { point: x });
        }
        Ok([m1 / norm, m2 / norm])
    }

    /// `[p/ρ^γ, Bernoulli, ψ]` from interpolated primitive fields.
    fn invariants(&self, x: [f64; 2]) -> Result<[f64; 3], AnalysisError> {
        let (xi, zeta) = self.locate(x)?;
        let at = |f: &[f64]| self.grid.interpolate(f, xi, zeta);
        let (m1, m2, rho, p) = (at(&self.fields.m1), at(&self.fields.m2), at(&self.fields.rho), at(&self.fields.p));
        let g = self.gamma;
        Ok([p / rho.powf(g), (m1 * m1 + m2 * m2) / (2.0 * rho * rho) + g * p / ((g - 1.0) * rho), at(self.psi)])
    }
}

fn relative_spread(v: &[f64]) -> f64 {
    let (lo, hi, big) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0f64), |(lo, hi, b), &x| (lo.min(x), hi.max(x), b.max(x.abs())));
    if big == 0.0 {
        0.0
    } else {
        (hi - lo) / big
    }
}

/// Traces the streamline through `seed` downstream with classical RK4 on
/// the unit direction field `m/|m|` until it reaches the outflow boundary.
/// Step length is half the grid spacing in `x1`.
pub fn trace_streamline(
    grid: &CurvilinearGrid,
    psi: &[f64],
    fields: &EulerFields,
    gamma: f64,
    seed: [f64; 2],
) -> Result<StreamlineTrace, AnalysisError> {
    if stagnation_corners(grid).iter().any(|c| (seed[0] - c[0]).hypot(seed[1] - c[1]) < 1e-9) {
        return Err(AnalysisError::StagnationEncountered { point: seed });
    }
    let m_max = fields.m1.iter().zip(&fields.m2).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
    let sampler = Sampler { grid, psi, fields, gamma, m_floor: 1e-10 * m_max.max(f64::MIN_POSITIVE) };
    let h = 0.5 * grid.dxi;
    let max_steps = (40.0 * (grid.x_max - grid.x_min + grid.top) / h) as usize;

    let mut x = seed;
    let mut points = vec![x];
    let mut inv = vec![sampler.invariants(x)?];
    sampler.direction(x)?;
    for _ in 0..max_steps {
        if x[0] + h > grid.x_max {
            break;
        }
        let add = |p: [f64; 2], d: [f64; 2], s: f64| [p[0] + s * d[0], p[1] + s * d[1]];
        let k1 = sampler.direction(x)?;
        let k2 = sampler.direction(add(x, k1, 0.5 * h))?;
        let k3 = sampler.direction(add(x, k2, 0.5 * h))?;
        let k4 = sampler.direction(add(x, k3, h))?;
        x = [
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        points.push(x);
        inv.push(sampler.invariants(x)?);
    }
    let column = |c: usize| inv.iter().map(|v| v[c]).collect::<Vec<_>>();
    let psi_col = column(2);
    let psi_variation =
        psi_col.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - psi_col.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(StreamlineTrace {
        seed,
        points,
        entropy_variation: relative_spread(&column(0)),
        bernoulli_variation: relative_spread(&column(1)),
        psi_variation,
    })
}

pub fn streamline_conservation(
    grid: &CurvilinearGrid,
    psi: &[f64],
    fields: &EulerFields,
    gamma: f64,
    seeds: &[[f64; 2]],
) -> Result<StreamlineSummary, AnalysisError> {
    let traces = seeds.iter().map(|&s| trace_streamline(grid, psi, fields, gamma, s)).collect::<Result<Vec<_>, _>>()?;
    let max = |f: fn(&StreamlineTrace) -> f64| traces.iter().map(f).fold(0.0, f64::max);
    Ok(StreamlineSummary {
        max_entropy_variation: max(|t| t.entropy_variation),
        max_bernoulli_variation: max(|t| t.bernoulli_variation),
        max_psi_variation: max(|t| t.psi_variation),
        traces,
    })
}

/// `n` seeds two cells downstream of the inflow boundary, evenly spaced in
/// `x2` over `range`.
pub fn inflow_seeds(grid: &CurvilinearGrid, n: usize, range: [f64; 2]) -> Vec<[f64; 2]> {
    let x1 = grid.x_min + 2.0 * grid.dxi;
    (0..n)
        .map(|k| {
            let t = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
            [x1, range[0] + t * (range[1] - range[0])]
        })
        .collect()
}
