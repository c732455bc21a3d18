//! Comparison functions and pointwise checks of `Lv < 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::geometry::{BoundaryProfile, Corner, CurvilinearGrid};
use crate::solver::LinearEllipticProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BarrierVariant {
    /// `|x - (0,-1)|^{-α-β} (x2+1)^α`.
    Global,
    /// `r^{1+α} sin(τ + θ - θ0)` in polar coordinates about a corner.
    Corner { center: [f64; 2], theta0: f64, tau: f64 },
    /// `|x - c|^{-3β/4} (x2+1)^{β/2}`.
    Uniqueness { center: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub alpha: f64,
    pub beta: f64,
    pub variant: BarrierVariant,
}

/// Value, gradient and Hessian `[v11, v12, v22]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierJet {
    pub v: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl BarrierSpec {
    pub fn global(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, variant: BarrierVariant::Global }
    }

    pub fn uniqueness(alpha: f64, beta: f64, center: [f64; 2]) -> Self {
        Self { alpha, beta, variant: BarrierVariant::Uniqueness { center } }
    }

    /// Corner barrier with `θ0` on the lower edge of the fluid sector and
    /// `τ = min(δ, (π - interior angle)/4)`.
    pub fn corner(alpha: f64, beta: f64, profile: &BoundaryProfile, which: Corner) -> Self {
        let (tail, arc) = profile.corner_tangents(which);
        let theta0 = tail.min(arc);
        let interior = profile.angle(which);
        let tau = profile.delta.min((PI - interior) / 4.0).max(1e-3);
        Self { alpha, beta, variant: BarrierVariant::Corner { center: profile.corner(which), theta0, tau } }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.beta > 0.0 && self.beta < self.alpha && self.alpha < 1.0) {
            return Err(AnalysisError::InvalidSpec(format!(
                "need 0 < beta < alpha < 1, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        if let BarrierVariant::Corner { tau, .. } = self.variant {
            if !(tau > 0.0 && tau < PI / 2.0) {
                return Err(AnalysisError::InvalidSpec(format!("tau = {tau} must be small and positive")));
            }
        }
        Ok(())
    }

    /// Point where the barrier is singular; skipped by the scan.
    pub fn center(&self) -> [f64; 2] {
        match self.variant {
            BarrierVariant::Global => [0.0, -1.0],
            BarrierVariant::Corner { center, .. } | BarrierVariant::Uniqueness { center } => center,
        }
    }

    pub fn jet(&self, x: [f64; 2]) -> BarrierJet {
        match self.variant {
            BarrierVariant::Global => power_jet(x, [0.0, -1.0], self.alpha + self.beta, self.alpha),
            BarrierVariant::Uniqueness { center } => power_jet(x, center, 0.75 * self.beta, 0.5 * self.beta),
            BarrierVariant::Corner { center, theta0, tau } => sector_jet(x, center, 1.0 + self.alpha, tau - theta0),
        }
    }
}

/// `|x - c|^{-q} (x2+1)^s` by logarithmic differentiation.
fn power_jet(x: [f64; 2], c: [f64; 2], q: f64, s: f64) -> BarrierJet {
    let d = [x[0] - c[0], x[1] - c[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    let w = x[1] + 1.0;
    let v = r2.powf(-0.5 * q) * w.powf(s);
    let l = [-q * d[0] / r2, -q * d[1] / r2 + s / w];
    let lij = |i: usize, j: usize| {
        let kron = if i == j { 1.0 } else { 0.0 };
        let mut t = -q * (kron / r2 - 2.0 * d[i] * d[j] / (r2 * r2));
        if i == 1 && j == 1 {
            t -= s / (w * w);
        }
        t
    };
    BarrierJet {
        v,
        grad: [v * l[0], v * l[1]],
        hess: [v * (l[0] * l[0] + lij(0, 0)), v * (l[0] * l[1] + lij(0, 1)), v * (l[1] * l[1] + lij(1, 1))],
    }
}

/// `r^a sin(θ + c)` about `center`.
fn sector_jet(x: [f64; 2], center: [f64; 2], a: f64, c: f64) -> BarrierJet {
    let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
    let r = dx.hypot(dy);
    let th = dy.atan2(dx);
    let (s, co) = (th.sin(), th.cos());
    let phi = th + c;
    // For F = r^b k(θ): F_x = r^{b-1}(b k cosθ - k' sinθ), F_y = r^{b-1}(b k sinθ + k' cosθ).
    let hx = a * phi.sin() * co - phi.cos() * s;
    let hx1 = (a - 1.0) * (phi + th).cos();
    let hy = a * phi.sin() * s + phi.cos() * co;
    let hy1 = (a - 1.0) * (phi + th).sin();
    let b = a - 1.0;
    let rb = r.powf(b - 1.0);
    BarrierJet {
        v: r.powf(a) * phi.sin(),
        grad: [r.powf(b) * hx, r.powf(b) * hy],
        hess: [rb * (b * hx * co - hx1 * s), rb * (b * hx * s + hx1 * co), rb * (b * hy * s + hy1 * co)],
    }
}

/// Outcome of a barrier scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCheck {
    /// Largest `Lv` over the scanned nodes.
    pub max_lv: f64,
    /// Largest `Lv / v` (scale-free).
    pub max_relative: f64,
    pub worst_node: (usize, usize),
    pub worst_point: [f64; 2],
    pub nodes_checked: usize,
}

impl BarrierCheck {
    pub fn passes(&self) -> bool {
        self.max_lv < 0.0
    }
}

/// `Lv = a_ij v_ij + b_i v_i + b0 v` for one set of coefficients.
pub fn apply_operator(jet: &BarrierJet, a: [f64; 3], b: [f64; 2], b0: f64) -> f64 {
    a[0] * jet.hess[0]
        + 2.0 * a[1] * jet.hess[1]
        + a[2] * jet.hess[2]
        + b[0] * jet.grad[0]
        + b[1] * jet.grad[1]
        + b0 * jet.v
}

/// Evaluates `Lv` at every interior node with the problem's coefficients.
/// Nodes within `1e-9` of the barrier centre are skipped.
pub fn barrier_check(
    grid: &CurvilinearGrid,
    problem: &LinearEllipticProblem,
    spec: &BarrierSpec,
) -> Result<BarrierCheck, AnalysisError> {
    spec.validate()?;
    let c = spec.center();
    let mut out = BarrierCheck {
        max_lv: f64::NEG_INFINITY,
        max_relative: f64::NEG_INFINITY,
        worst_node: (0, 0),
        worst_point: [f64::NAN; 2],
        nodes_checked: 0,
    };
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        let x = grid.nodes[k];
        if grid.is_boundary(i, j) || (x[0] - c[0]).hypot(x[1] - c[1]) < 1e-9 {
            continue;
        }
        let jet = spec.jet(x);
        let lv = apply_operator(
            &jet,
            [problem.a11[k], problem.a12[k], problem.a22[k]],
            [problem.b1[k], problem.b2[k]],
            problem.b0[k],
        );
        out.nodes_checked += 1;
        if lv > out.max_lv {
            out.max_lv = lv;
            out.worst_node = (i, j);
            out.worst_point = x;
        }
        if jet.v.abs() > 0.0 {
            out.max_relative = out.max_relative.max(lv / jet.v.abs());
        }
    }
    if out.nodes_checked == 0 {
        return Err(AnalysisError::EmptySelection("no interior nodes for the barrier scan".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_rectangle_grid, Grading};
    use proptest::prelude::*;

    /// Fourth-order central differences.
    fn fd_jet(spec: &BarrierSpec, x: [f64; 2]) -> ([f64; 2], [f64; 3]) {
        let h = 1e-3;
        let v = |dx: f64, dy: f64| spec.jet([x[0] + dx, x[1] + dy]).v;
        let d1 = |f: &dyn Fn(f64) -> f64| (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
        let d2 = |f: &dyn Fn(f64) -> f64| {
            (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
        };
        let g = [d1(&|t| v(t, 0.0)), d1(&|t| v(0.0, t))];
        let mixed = d1(&|s| d1(&|t| v(s, t)));
        (g, [d2(&|t| v(t, 0.0)), mixed, d2(&|t| v(0.0, t))])
    }

    fn close(a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= 1e-6 * scale
    }

    #[test]
    fn laplacian_spot_value_at_origin() {
        let s = BarrierSpec::global(0.8, 0.4);
        let jet = s.jet([0.0, 0.0]);
        assert!((jet.v - 1.0).abs() < 1e-15);
        let lap = apply_operator(&jet, [1.0, 0.0, 1.0], [0.0, 0.0], 0.0);
        // (β² - α²) - α(1 - α)
        assert!((lap - (-0.64)).abs() < 1e-10, "{lap}");
    }

    #[test]
    fn sector_barrier_is_subharmonic() {
        // Δ(r^a sin(θ + c)) = (a² - 1) r^{a-2} sin(θ + c), positive on the sector.
        let s = BarrierSpec {
            alpha: 0.8,
            beta: 0.4,
            variant: BarrierVariant::Corner { center: [0.0, 0.0], theta0: 0.0, tau: 0.1 },
        };
        let x = [0.3, 0.4];
        let jet = s.jet(x);
        let lap = jet.hess[0] + jet.hess[2];
        let r = 0.5f64;
        let expect = (1.8f64 * 1.8 - 1.0) * r.powf(-0.2) * (0.4f64.atan2(0.3) + 0.1).sin();
        assert!((lap - expect).abs() < 1e-12);
    }

    #[test]
    fn laplacian_scan_on_rectangle() {
        let grid = generate_rectangle_grid([-4.0, 4.0], [0.0, 4.0], 17, 9, Grading::uniform()).unwrap();
        let mut p = LinearEllipticProblem::laplace(grid.len());
        p.a11.iter_mut().chain(p.a22.iter_mut()).for_each(|a| *a = 1.39);
        let check = barrier_check(&grid, &p, &BarrierSpec::global(0.8, 0.4)).unwrap();
        assert!(check.passes(), "{check:?}");
        assert_eq!(check.nodes_checked, 15 * 7);
        let bad = BarrierSpec::global(0.4, 0.8);
        assert!(barrier_check(&grid, &p, &bad).is_err());
    }

    proptest! {
        #[test]
        fn analytic_derivatives_match_differences(x1 in -6.0f64..6.0, x2 in 0.05f64..6.0, which in 0usize..3) {
            let spec = match which {
                0 => BarrierSpec::global(0.8, 0.4),
                1 => BarrierSpec::uniqueness(0.8, 0.4, [1.0, 0.0]),
                _ => BarrierSpec { alpha: 0.8, beta: 0.4, variant: BarrierVariant::Corner { center: [-1.0, -0.2], theta0: 0.05, tau: 0.1 } },
            };
            let c = spec.center();
            prop_assume!((x1 - c[0]).hypot(x2 - c[1]) > 0.2);
            let jet = spec.jet([x1, x2]);
            let (g, h) = fd_jet(&spec, [x1, x2]);
            let gs = jet.grad[0].abs().max(jet.grad[1].abs()).max(jet.v.abs());
            let hs = jet.hess.iter().fold(gs, |m, v| m.max(v.abs()));
            prop_assert!(close(jet.grad[0], g[0], gs) && close(jet.grad[1], g[1], gs), "grad {:?} vs {:?}", jet.grad, g);
            for k in 0..3 {
                prop_assert!(close(jet.hess[k], h[k], hs), "hess {:?} vs {:?}", jet.hess, h);
            }
        }
    }
}
