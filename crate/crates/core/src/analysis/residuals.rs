//! Conservative-form residuals of the steady Euler equations.

use super::{AnalysisError, Exclusion};
use crate::geometry::CurvilinearGrid;
use crate::solver::EulerFields;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualNorm {
    pub max: f64,
    /// Root mean square over the scanned nodes.
    pub rms: f64,
}

/// `∇·m`, `∇·(m⊗m/ρ + pI)` and `∇·(m (E + p/ρ))` at interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerResiduals {
    pub mass: ResidualNorm,
    pub momentum1: ResidualNorm,
    pub momentum2: ResidualNorm,
    pub energy: ResidualNorm,
    pub nodes: usize,
}

impl EulerResiduals {
    pub fn max(&self) -> f64 {
        self.all().iter().map(|(_, r)| r.max).fold(0.0, f64::max)
    }

    pub fn all(&self) -> [(&'static str, ResidualNorm); 4] {
        [("mass", self.mass), ("momentum1", self.momentum1), ("momentum2", self.momentum2), ("energy", self.energy)]
    }
}

pub fn euler_residuals(
    grid: &CurvilinearGrid,
    fields: &EulerFields,
    exclusion: &Exclusion,
) -> Result<EulerResiduals, AnalysisError> {
    let n = grid.len();
    let mut fluxes: Vec<[Vec<f64>; 2]> = vec![
        [vec![0.0; n], vec![0.0; n]],
        [vec![0.0; n], vec![0.0; n]],
        [vec![0.0; n], vec![0.0; n]],
        [vec![0.0; n], vec![0.0; n]],
    ];
    for k in 0..n {
        let (m1, m2, rho, p) = (fields.m1[k], fields.m2[k], fields.rho[k], fields.p[k]);
        let h = fields.energy[k] + p / rho;
        let f = [[m1, m2], [m1 * m1 / rho + p, m1 * m2 / rho], [m1 * m2 / rho, m2 * m2 / rho + p], [m1 * h, m2 * h]];
        for (e, fe) in f.iter().enumerate() {
            fluxes[e][0][k] = fe[0];
            fluxes[e][1][k] = fe[1];
        }
    }
    let mut acc = [(0.0f64, 0.0f64); 4];
    let mut nodes = 0;
    for k in 0..n {
        let (i, j) = grid.ij(k);
        if grid.is_boundary(i, j) || exclusion.excludes(grid.nodes[k]) {
            continue;
        }
        nodes += 1;
        for (e, a) in acc.iter_mut().enumerate() {
            let div = grid.gradient(&fluxes[e][0], i, j)[0] + grid.gradient(&fluxes[e][1], i, j)[1];
            a.0 = a.0.max(div.abs());
            a.1 += div * div;
        }
    }
    if nodes == 0 {
        return Err(AnalysisError::EmptySelection("no interior nodes outside the excluded balls".into()));
    }
    let norm = |a: (f64, f64)| ResidualNorm { max: a.0, rms: (a.1 / nodes as f64).sqrt() };
    Ok(EulerResiduals {
        mass: norm(acc[0]),
        momentum1: norm(acc[1]),
        momentum2: norm(acc[2]),
        energy: norm(acc[3]),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::{build_stream_limit, FarFieldState, GasConstants};
    use crate::geometry::{generate_rectangle_grid, Grading};
    use crate::solver::recover_euler_fields;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (CurvilinearGrid, crate::farfield::StreamLimitData) {
        let s = build_stream_limit(FarFieldState::constant(GasConstants::default()).unwrap(), 10.0);
        let g = generate_rectangle_grid([-4.0, 4.0], [0.0, 4.0], 33, 17, Grading::uniform()).unwrap();
        (g, s)
    }

    #[test]
    fn background_residuals_vanish() {
        let (g, s) = setup();
        let psi: Vec<f64> = g.nodes.iter().map(|x| s.l(x[1])).collect();
        let f = recover_euler_fields(&g, &s, &psi).unwrap();
        let r = euler_residuals(&g, &f, &Exclusion::none()).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn noise_inflates_residuals() {
        let (g, s) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let clean: Vec<f64> = g.nodes.iter().map(|x| s.l(x[1])).collect();
        let noisy: Vec<f64> = clean.iter().map(|v| v + 1e-3 * rng.random_range(-1.0..1.0)).collect();
        let rc = euler_residuals(&g, &recover_euler_fields(&g, &s, &clean).unwrap(), &Exclusion::none()).unwrap();
        let rn = euler_residuals(&g, &recover_euler_fields(&g, &s, &noisy).unwrap(), &Exclusion::none()).unwrap();
        assert!(rn.momentum1.max > 1e6 * rc.momentum1.max.max(1e-15), "{rc:?} {rn:?}");
        assert!(rn.momentum1.max > 1e-4);
    }

    proptest! {
        #[test]
        fn constant_states_have_zero_residual(m1 in -1.0f64..1.0, m2 in -1.0f64..1.0, rho in 0.5f64..2.0, p in 0.5f64..2.0) {
            let g = generate_rectangle_grid([-2.0, 2.0], [0.0, 2.0], 9, 9, Grading::uniform()).unwrap();
            let n = g.len();
            let f = EulerFields {
                m1: vec![m1; n], m2: vec![m2; n], rho: vec![rho; n], p: vec![p; n],
                energy: vec![1.0; n], mach: vec![0.1; n], sonic_margin: vec![1.0; n],
            };
            let r = euler_residuals(&g, &f, &Exclusion::none()).unwrap();
            prop_assert!(r.max() < 1e-12);
        }
    }
}
