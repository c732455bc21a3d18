//! Subsonic density from Bernoulli's law and the pointwise coefficients of
//! the stream-function equation.

use thiserror::Error;

use crate::farfield::{FarFieldError, StreamFunctions, StreamLimitData};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("chi = {chi:.6e} exceeds the sonic limit {chi_max:.6e}; no subsonic density")]
    SupersonicChi { chi: f64, chi_max: f64 },
    #[error("chi = {chi:.6e} is negative")]
    NegativeChi { chi: f64 },
    #[error("entropy/Bernoulli values A = {a}, B = {b} must be positive")]
    InvalidFunctions { a: f64, b: f64 },
    #[error(transparent)]
    FarField(#[from] FarFieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityWarning {
    /// `χ` grazed `χ_max`; the sonic density was returned.
    SonicProximity,
}

/// Subsonic-branch density at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState {
    pub rho: f64,
    pub rho_chi: f64,
    pub rho_psi: f64,
    /// `c²ρ² - |∇ψ|²` with `c²ρ² = (γ-1) A ρ^{γ+1}`.
    pub sonic_margin: f64,
    pub chi: f64,
    pub warning: Option<DensityWarning>,
}

/// `h(ρ) = B ρ² - A ρ^{γ+1}`.
pub fn bernoulli_h(rho: f64, gamma: f64, a: f64, b: f64) -> f64 {
    b * rho * rho - a * rho.powf(gamma + 1.0)
}

/// Density at which `h` peaks (sonic density).
pub fn sonic_density(gamma: f64, a: f64, b: f64) -> f64 {
    (2.0 * b / ((gamma + 1.0) * a)).powf(1.0 / (gamma - 1.0))
}

/// Stagnation density, the subsonic root of `h = 0`.
pub fn stagnation_density(gamma: f64, a: f64, b: f64) -> f64 {
    (b / a).powf(1.0 / (gamma - 1.0))
}

/// Largest `χ` with a subsonic root.
pub fn chi_max(gamma: f64, a: f64, b: f64) -> f64 {
    bernoulli_h(sonic_density(gamma, a, b), gamma, a, b)
}

const SONIC_TOL: f64 = 1e-12;

/// Solves `h(ρ) = χ` on the subsonic branch `[ρ_sonic, ρ_max]`.
pub fn solve_density(chi: f64, gamma: f64, f: &StreamFunctions) -> Result<DensityState, ThermoError> {
    let (a, b) = (f.a[0], f.b[0]);
    if !(a > 0.0 && b > 0.0) {
        return Err(ThermoError::InvalidFunctions { a, b });
    }
    if chi < 0.0 || chi.is_nan() {
        return Err(ThermoError::NegativeChi { chi });
    }
    let rho_s = sonic_density(gamma, a, b);
    let rho_max = stagnation_density(gamma, a, b);
    let cmax = bernoulli_h(rho_s, gamma, a, b);
    let mut warning = None;
    let rho = if chi > cmax * (1.0 + SONIC_TOL) {
        return Err(ThermoError::SupersonicChi { chi, chi_max: cmax });
    } else if chi >= cmax * (1.0 - SONIC_TOL) {
        warning = Some(DensityWarning::SonicProximity);
        rho_s
    } else {
        newton_on_branch(chi, gamma, a, b, rho_s, rho_max, cmax)
    };
    Ok(finish_state(rho, chi, gamma, f, warning))
}

fn newton_on_branch(chi: f64, gamma: f64, a: f64, b: f64, rho_s: f64, rho_max: f64, cmax: f64) -> f64 {
    let phi = |r: f64| bernoulli_h(r, gamma, a, b) - chi;
    // phi(rho_s) > 0 > phi(rho_max) and phi is decreasing on the bracket.
    let (mut lo, mut hi) = (rho_s, rho_max);
    let mut rho = (rho_max * (1.0 - chi / (2.0 * cmax))).clamp(lo, hi);
    for _ in 0..200 {
        let r = phi(rho);
        if r == 0.0 {
            return rho;
        }
        if r > 0.0 {
            lo = rho;
        } else {
            hi = rho;
        }
        let d = 2.0 * b * rho - (gamma + 1.0) * a * rho.powf(gamma);
        let next = rho - r / d;
        let next = if d < 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        let step = (next - rho).abs();
        rho = next;
        if step <= 1e-15 * rho || hi - lo <= 1e-15 * rho {
            break;
        }
    }
    rho
}

fn finish_state(rho: f64, chi: f64, gamma: f64, f: &StreamFunctions, warning: Option<DensityWarning>) -> DensityState {
    let (a, a1) = (f.a[0], f.a[1]);
    let (b, b1) = (f.b[0], f.b[1]);
    let d = (gamma + 1.0) * a * rho.powf(gamma) - 2.0 * b * rho;
    let c2rho2 = (gamma - 1.0) * a * rho.powf(gamma + 1.0);
    DensityState {
        rho,
        rho_chi: -1.0 / d,
        rho_psi: (b1 * rho * rho - a1 * rho.powf(gamma + 1.0)) / d,
        sonic_margin: c2rho2 - 2.0 * chi,
        chi,
        warning,
    }
}

/// Density at stream value `psi` with gradient `grad`.
pub fn density_at(psi: f64, grad: [f64; 2], stream: &StreamLimitData) -> Result<DensityState, ThermoError> {
    let f = stream.functions(psi)?;
    solve_density(0.5 * (grad[0] * grad[0] + grad[1] * grad[1]), stream.gamma(), &f)
}

/// Pressure `((γ-1)/γ) A ρ^γ`.
pub fn pressure(gamma: f64, a: f64, rho: f64) -> f64 {
    (gamma - 1.0) / gamma * a * rho.powf(gamma)
}

/// Energy `|m|²/(2ρ²) + p/((γ-1)ρ)`.
pub fn energy(gamma: f64, momentum_sq: f64, rho: f64, p: f64) -> f64 {
    momentum_sq / (2.0 * rho * rho) + p / ((gamma - 1.0) * rho)
}

/// Coefficients of `a_ij ψ_ij = F` and the partials used by the
/// linearization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBundle {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub f: f64,
    pub da22_dpsi: f64,
    pub df_dpsi: f64,
    pub da22_dgrad: [f64; 2],
    pub df_dgrad: [f64; 2],
    /// `c²ρ²`.
    pub c2rho2: f64,
    pub density: DensityState,
}

impl CoefficientBundle {
    pub fn determinant(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }
}

/// Evaluates the coefficients at a solved density.
pub fn coefficients(grad: [f64; 2], gamma: f64, f: &StreamFunctions, density: DensityState) -> CoefficientBundle {
    let [a, a1, a2] = f.a;
    let [b, b1, b2] = f.b;
    let DensityState { rho, rho_chi, rho_psi, .. } = density;
    let [g1, g2] = grad;
    let kappa = (gamma - 1.0) / gamma;

    let r_gm1 = rho.powf(gamma - 1.0);
    let r_g = r_gm1 * rho;
    let r_gp1 = r_g * rho;
    let r_gp2 = r_gp1 * rho;
    let r_gp3 = r_gp2 * rho;

    let p = (gamma - 1.0) * a * r_gp1;
    let p_psi = (gamma - 1.0) * (a1 * r_gp1 + (gamma + 1.0) * a * r_g * rho_psi);
    let p_rho_chi = (gamma - 1.0) * (gamma + 1.0) * a * r_g * rho_chi;

    let g = gamma * a * b1 - 2.0 * a1 * b + a * a1 * r_gm1;
    let g_psi_explicit = gamma * (a1 * b1 + a * b2) - 2.0 * (a2 * b + a1 * b1) + (a1 * a1 + a * a2) * r_gm1;
    let g_rho = (gamma - 1.0) * a * a1 * rho.powf(gamma - 2.0);
    let f_rho = (gamma + 3.0) * r_gp2 * g + r_gp3 * g_rho;

    let df_dpsi = kappa * (r_gp3 * g_psi_explicit + f_rho * rho_psi);
    let df_dchi = kappa * f_rho * rho_chi;

    CoefficientBundle {
        a11: p - g2 * g2,
        a12: g1 * g2,
        a22: p - g1 * g1,
        f: kappa * r_gp3 * g,
        da22_dpsi: p_psi,
        df_dpsi,
        da22_dgrad: [p_rho_chi * g1 - 2.0 * g1, p_rho_chi * g2],
        df_dgrad: [df_dchi * g1, df_dchi * g2],
        c2rho2: p,
        density,
    }
}

/// Solves for the density and evaluates the coefficients in one call.
pub fn coefficients_at(psi: f64, grad: [f64; 2], stream: &StreamLimitData) -> Result<CoefficientBundle, ThermoError> {
    let f = stream.functions(psi)?;
    let gamma = stream.gamma();
    let density = solve_density(0.5 * (grad[0] * grad[0] + grad[1] * grad[1]), gamma, &f)?;
    Ok(coefficients(grad, gamma, &f, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GAMMA: f64 = 1.4;

    fn background() -> StreamFunctions {
        StreamFunctions::constant(3.5, 3.505)
    }

    fn bisection(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn golden_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = hi - r * (hi - lo);
            let x2 = lo + r * (hi - lo);
            if f(x1) < f(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        f(0.5 * (lo + hi))
    }

    #[test]
    fn background_density_is_one() {
        let d = solve_density(0.005, GAMMA, &background()).unwrap();
        assert!((d.rho - 1.0).abs() < 1e-12);
        assert!((d.rho_chi + 1.0 / 1.39).abs() < 1e-10);
        assert_eq!(d.rho_psi, 0.0);
        assert!(d.warning.is_none());
        assert!((pressure(GAMMA, 3.5, d.rho) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stagnation_density_matches_bisection() {
        let d = solve_density(0.0, GAMMA, &background()).unwrap();
        let oracle = bisection(1.0, 1.1, |r| bernoulli_h(r, GAMMA, 3.5, 3.505));
        assert!((d.rho - oracle).abs() < 1e-10);
        assert!((d.rho - 1.003575).abs() < 1e-6);
    }

    #[test]
    fn sonic_limit_matches_golden_section() {
        let oracle = golden_max(0.1, 1.0, |r| bernoulli_h(r, GAMMA, 3.5, 3.505));
        let cmax = chi_max(GAMMA, 3.5, 3.505);
        assert!((cmax - oracle).abs() < 1e-10);
        assert!((cmax - 0.23642).abs() < 1e-4);
        assert!(matches!(solve_density(0.3, GAMMA, &background()), Err(ThermoError::SupersonicChi { .. })));
        let near = solve_density(cmax * (1.0 - 1e-13), GAMMA, &background()).unwrap();
        assert_eq!(near.warning, Some(DensityWarning::SonicProximity));
        assert!(matches!(solve_density(-1e-9, GAMMA, &background()), Err(ThermoError::NegativeChi { .. })));
    }

    #[test]
    fn background_coefficients() {
        let f = background();
        let d = solve_density(0.005, GAMMA, &f).unwrap();
        let c = coefficients([0.0, 0.1], GAMMA, &f, d);
        assert!((c.a11 - 1.39).abs() < 1e-12);
        assert!((c.a22 - 1.4).abs() < 1e-12);
        assert_eq!(c.a12, 0.0);
        assert_eq!(c.f, 0.0);
        assert!((c.determinant() - 1.946).abs() < 1e-12);
    }

    /// Quadratic model `A(ψ)`, `B(ψ)` around `ψ = 0`.
    #[derive(Clone, Copy)]
    struct Model {
        a: [f64; 3],
        b: [f64; 3],
    }

    impl Model {
        fn at(&self, psi: f64) -> StreamFunctions {
            let q = |c: [f64; 3]| [c[0] + c[1] * psi + 0.5 * c[2] * psi * psi, c[1] + c[2] * psi, c[2]];
            StreamFunctions { a: q(self.a), b: q(self.b) }
        }

        fn eval(&self, psi: f64, grad: [f64; 2]) -> CoefficientBundle {
            let f = self.at(psi);
            let d = solve_density(0.5 * (grad[0] * grad[0] + grad[1] * grad[1]), GAMMA, &f).unwrap();
            coefficients(grad, GAMMA, &f, d)
        }
    }

    fn random_state(rng: &mut ChaCha8Rng) -> (Model, f64, [f64; 2]) {
        let model = Model {
            a: [3.5 * (1.0 + rng.random_range(-0.05..0.05)), rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)],
            b: [
                3.505 * (1.0 + rng.random_range(-0.05..0.05)),
                rng.random_range(-0.5..0.5),
                rng.random_range(-1.0..1.0),
            ],
        };
        let f = model.at(0.0);
        let cmax = chi_max(GAMMA, f.a[0], f.b[0]);
        let speed = (2.0 * cmax * rng.random_range(0.0..0.6)).sqrt();
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        (model, 0.0, [speed * angle.cos(), speed * angle.sin()])
    }

    fn close(analytic: f64, fd: f64, scale: f64) -> bool {
        (analytic - fd).abs() <= 1e-5 * analytic.abs().max(scale)
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (model, psi, grad) = random_state(&mut rng);
            let c = model.eval(psi, grad);
            let h = 1e-6;

            // ρ_χ and ρ_ψ.
            let f0 = model.at(psi);
            let chi = 0.5 * (grad[0] * grad[0] + grad[1] * grad[1]);
            let rho = |chi: f64, psi: f64| solve_density(chi, GAMMA, &model.at(psi)).unwrap().rho;
            let fd_chi = (rho(chi + h, psi) - rho((chi - h).max(0.0), psi)) / (chi + h - (chi - h).max(0.0));
            let fd_psi = (rho(chi, psi + h) - rho(chi, psi - h)) / (2.0 * h);
            assert!(close(c.density.rho_chi, fd_chi, 1e-3), "rho_chi {} vs {fd_chi}", c.density.rho_chi);
            assert!(close(c.density.rho_psi, fd_psi, 1e-3), "rho_psi {} vs {fd_psi}", c.density.rho_psi);
            assert!(c.density.rho_chi < 0.0);
            assert!((bernoulli_h(c.density.rho, GAMMA, f0.a[0], f0.b[0]) - chi).abs() <= 1e-12 * f0.b[0]);

            let fscale = c.f.abs().max(1e-3);
            let (p, m) = (model.eval(psi + h, grad), model.eval(psi - h, grad));
            assert!(close(c.da22_dpsi, (p.a22 - m.a22) / (2.0 * h), 1e-3));
            assert!(
                close(c.df_dpsi, (p.f - m.f) / (2.0 * h), fscale),
                "F_psi {} vs {}",
                c.df_dpsi,
                (p.f - m.f) / (2.0 * h)
            );
            for i in 0..2 {
                let mut gp = grad;
                let mut gm = grad;
                gp[i] += h;
                gm[i] -= h;
                let (p, m) = (model.eval(psi, gp), model.eval(psi, gm));
                assert!(close(c.da22_dgrad[i], (p.a22 - m.a22) / (2.0 * h), 1e-3));
                assert!(close(c.df_dgrad[i], (p.f - m.f) / (2.0 * h), fscale * 1e-2));
            }
        }
    }

    #[test]
    fn source_vanishes_for_constant_functions() {
        let f = StreamFunctions::constant(3.2, 3.3);
        let d = solve_density(0.01, GAMMA, &f).unwrap();
        let c = coefficients([0.1, 0.05], GAMMA, &f, d);
        assert_eq!(c.f, 0.0);
        assert_eq!(c.df_dpsi, 0.0);
        assert_eq!(c.df_dgrad, [0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn accepted_states_are_elliptic(frac in 0.0f64..0.999, angle in 0.0f64..std::f64::consts::TAU, a in 3.0f64..4.0, bshift in 1e-4f64..0.5) {
            let f = StreamFunctions::constant(a, a + bshift);
            let cmax = chi_max(GAMMA, a, a + bshift);
            let chi = frac * cmax;
            let speed = (2.0 * chi).sqrt();
            let grad = [speed * angle.cos(), speed * angle.sin()];
            let d = solve_density(0.5 * (grad[0] * grad[0] + grad[1] * grad[1]), GAMMA, &f).unwrap();
            let hval = bernoulli_h(d.rho, GAMMA, a, a + bshift);
            prop_assert!((hval - d.chi).abs() <= 1e-12 * (a + bshift));
            prop_assert!(d.rho >= sonic_density(GAMMA, a, a + bshift));
            prop_assert!(d.rho_chi < 0.0);
            let c = coefficients(grad, GAMMA, &f, d);
            prop_assert_eq!(c.a12, grad[0] * grad[1]);
            let identity = c.c2rho2 * (c.c2rho2 - speed * speed);
            prop_assert!((c.determinant() - identity).abs() <= 1e-10 * identity.abs().max(1e-12));
            if frac < 0.99 {
                prop_assert!(c.determinant() > 0.0);
            }
        }
    }
}
