//! Euler fields `(m, ρ, p, E)` from a stream function.

use rayon::prelude::*;

use super::SolverError;
use crate::farfield::StreamLimitData;
use crate::geometry::CurvilinearGrid;
use crate::thermo::{energy, pressure, solve_density, ThermoError};

#[derive(Debug, Clone, PartialEq)]
pub struct EulerFields {
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub rho: Vec<f64>,
    pub p: Vec<f64>,
    pub energy: Vec<f64>,
    pub mach: Vec<f64>,
    pub sonic_margin: Vec<f64>,
}

impl EulerFields {
    pub fn max_mach(&self) -> f64 {
        self.mach.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_sonic_margin(&self) -> f64 {
        self.sonic_margin.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `m = (ψ_x2, -ψ_x1)`, `ρ` from Bernoulli's law, `p = ((γ-1)/γ) A ρ^γ`.
pub fn recover_euler_fields(
    grid: &CurvilinearGrid,
    stream: &StreamLimitData,
    psi: &[f64],
) -> Result<EulerFields, SolverError> {
    let gamma = stream.gamma();
    let grads = grid.gradient_field(psi);
    let rows: Vec<Result<[f64; 7], (usize, ThermoError)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let g = grads[k];
            let f = stream.functions(psi[k]).map_err(|e| (k, e.into()))?;
            let msq = g[0] * g[0] + g[1] * g[1];
            let d = solve_density(0.5 * msq, gamma, &f).map_err(|e| (k, e))?;
            let p = pressure(gamma, f.a[0], d.rho);
            let c2rho2 = (gamma - 1.0) * f.a[0] * d.rho.powf(gamma + 1.0);
            Ok([g[1], -g[0], d.rho, p, energy(gamma, msq, d.rho, p), (msq / c2rho2).sqrt(), d.sonic_margin])
        })
        .collect();
    let mut out = EulerFields {
        m1: Vec::new(),
        m2: Vec::new(),
        rho: Vec::new(),
        p: Vec::new(),
        energy: Vec::new(),
        mach: Vec::new(),
        sonic_margin: Vec::new(),
    };
    let mut bad = Vec::new();
    for r in rows {
        match r {
            Ok(v) => {
                out.m1.push(v[0]);
                out.m2.push(v[1]);
                out.rho.push(v[2]);
                out.p.push(v[3]);
                out.energy.push(v[4]);
                out.mach.push(v[5]);
                out.sonic_margin.push(v[6]);
            }
            Err((k, ThermoError::SupersonicChi { .. })) => bad.push(grid.ij(k)),
            Err((_, e)) => return Err(e.into()),
        }
    }
    if !bad.is_empty() {
        return Err(SolverError::SubsonicViolation { nodes: bad, min_margin: f64::NEG_INFINITY });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::{build_stream_limit, FarFieldState, GasConstants};
    use crate::geometry::{generate_rectangle_grid, Grading};

    #[test]
    fn background_shear_recovers_constant_state() {
        let s = build_stream_limit(FarFieldState::constant(GasConstants::default()).unwrap(), 10.0);
        let grid = generate_rectangle_grid([-2.0, 2.0], [0.0, 3.0], 17, 13, Grading::uniform()).unwrap();
        let psi: Vec<f64> = grid.nodes.iter().map(|x| s.l(x[1])).collect();
        let f = recover_euler_fields(&grid, &s, &psi).unwrap();
        for k in 0..grid.len() {
            assert!((f.m1[k] - 0.1).abs() < 1e-14);
            assert!(f.m2[k].abs() < 1e-14);
            assert!((f.rho[k] - 1.0).abs() < 1e-12);
            assert!((f.p[k] - 1.0).abs() < 1e-12);
            assert!((f.energy[k] - (0.005 + 2.5)).abs() < 1e-12);
        }
    }
}
