//! Asymptotic far-field state, the stream-function limit `l` and the
//! entropy and Bernoulli functions `A(s)`, `B(s)` transported along
//! streamlines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sampled_line_norm, HalfLine, LineNormSpec, SamplePlan};
use crate::quadrature::{gauss_kronrod_15, integrate_adaptive};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FarFieldError {
    #[error("invalid far field: {0}")]
    InvalidFarField(String),
    #[error("far-field momentum {value:.3e} at x2 = {x:.4} is not positive; l is not monotone")]
    NonMonotoneL { x: f64, value: f64 },
    #[error("stream value {s:.6e} lies outside the range covered by the far field")]
    OutOfRange { s: f64 },
}

/// Gas and background constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasConstants {
    pub gamma: f64,
    pub p0: f64,
    pub rho0: f64,
    pub m_star: f64,
    pub m0: f64,
    pub eps: f64,
}

impl Default for GasConstants {
    fn default() -> Self {
        Self { gamma: 1.4, p0: 1.0, rho0: 1.0, m_star: 0.5, m0: 0.1, eps: 1e-3 }
    }
}

impl GasConstants {
    /// Every violated constraint, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.gamma > 1.0) {
            out.push(format!("gamma = {} must exceed 1", self.gamma));
        }
        if !(self.p0 > 0.0 && self.rho0 > 0.0) {
            out.push(format!("p0 = {} and rho0 = {} must be positive", self.p0, self.rho0));
        }
        if !(self.m0 > 0.0 && self.m0 <= self.m_star) {
            out.push(format!("m0 = {} must satisfy 0 < m0 <= m_star = {}", self.m0, self.m_star));
        }
        if !(self.m_star / self.rho0 < (self.p0 / self.rho0).sqrt()) {
            out.push(format!(
                "m_star / rho0 = {} must be below sqrt(p0 / rho0) = {}",
                self.m_star / self.rho0,
                (self.p0 / self.rho0).sqrt()
            ));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            out.push(format!("eps = {} must lie in (0, 1/2)", self.eps));
        }
        out
    }
}

/// Shape `φ(x2)` of a far-field perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecayShape {
    /// `φ ≡ 1`.
    Constant,
    /// `φ = exp(-x2 / length)`.
    Exponential { length: f64 },
    /// `φ = (1 + x2)^{-power}`.
    Algebraic { power: f64 },
}

impl DecayShape {
    pub fn eval(&self, x: f64) -> [f64; 3] {
        match *self {
            DecayShape::Constant => [1.0, 0.0, 0.0],
            DecayShape::Exponential { length } => {
                let e = (-x / length).exp();
                [e, -e / length, e / (length * length)]
            }
            DecayShape::Algebraic { power } => {
                let t = 1.0 + x;
                [t.powf(-power), -power * t.powf(-power - 1.0), power * (power + 1.0) * t.powf(-power - 2.0)]
            }
        }
    }
}

/// `m∞ = m0 (1 + a_m φ)`, `ρ∞ = ρ0 (1 + a_ρ φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldProfile {
    pub shape: DecayShape,
    #[serde(default)]
    pub momentum_amplitude: f64,
    #[serde(default)]
    pub density_amplitude: f64,
}

impl FarFieldProfile {
    pub fn constant() -> Self {
        Self { shape: DecayShape::Constant, momentum_amplitude: 0.0, density_amplitude: 0.0 }
    }

    pub fn exponential_momentum(amplitude: f64, length: f64) -> Self {
        Self { shape: DecayShape::Exponential { length }, momentum_amplitude: amplitude, density_amplitude: 0.0 }
    }

    /// True when `m∞` and `ρ∞` do not depend on `x2`.
    pub fn is_uniform(&self) -> bool {
        matches!(self.shape, DecayShape::Constant) || (self.momentum_amplitude == 0.0 && self.density_amplitude == 0.0)
    }
}

/// Which formulas to use for `Ā` and `B̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `Ā = γp0/((γ-1)ρ∞^γ)`, `B̄ = m∞²/(2ρ∞²) + γp0/((γ-1)ρ∞)`, consistent
    /// with `A0`, `B0` and the pressure law.
    #[default]
    Consistent,
    /// The formulas exactly as printed: `Ā = γp0/((γ-1)ρ∞)`,
    /// `B̄ = m∞²/(2ρ∞²) + γp0/ρ∞`.
    StrictPaper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldState {
    pub gas: GasConstants,
    pub profile: FarFieldProfile,
    pub convention: Convention,
}

/// `K ρ^{-n}` and its first two derivatives along `x2`.
fn inverse_power(k: f64, n: f64, rho: [f64; 3]) -> [f64; 3] {
    let [r, r1, r2] = rho;
    [
        k * r.powf(-n),
        -n * k * r.powf(-n - 1.0) * r1,
        k * (n * (n + 1.0) * r.powf(-n - 2.0) * r1 * r1 - n * r.powf(-n - 1.0) * r2),
    ]
}

impl FarFieldState {
    pub fn new(gas: GasConstants, profile: FarFieldProfile, convention: Convention) -> Result<Self, FarFieldError> {
        let far = Self { gas, profile, convention };
        let v = gas.violations();
        if !v.is_empty() {
            return Err(FarFieldError::InvalidFarField(v.join("; ")));
        }
        if let DecayShape::Exponential { length } = profile.shape {
            if !(length > 0.0) {
                return Err(FarFieldError::InvalidFarField(format!("decay length {length} must be positive")));
            }
        }
        if let DecayShape::Algebraic { power } = profile.shape {
            if !(power > 0.0) {
                return Err(FarFieldError::InvalidFarField(format!("decay power {power} must be positive")));
            }
        }
        // Sampled positivity on [-1/2, 1e4].
        let plan = SamplePlan::default().with_points(400);
        for x in plan.abscissae(HalfLine::right_of(-0.5)) {
            let m = far.m_inf(x)[0];
            if !(m > 0.0) {
                return Err(FarFieldError::NonMonotoneL { x, value: m });
            }
            let rho = far.rho_inf(x)[0];
            if !(rho > 0.0) {
                return Err(FarFieldError::InvalidFarField(format!("density {rho} at x2 = {x} is not positive")));
            }
        }
        Ok(far)
    }

    pub fn constant(gas: GasConstants) -> Result<Self, FarFieldError> {
        Self::new(gas, FarFieldProfile::constant(), Convention::Consistent)
    }

    pub fn m_inf(&self, x: f64) -> [f64; 3] {
        let [p, p1, p2] = self.profile.shape.eval(x);
        let a = self.profile.momentum_amplitude;
        let m0 = self.gas.m0;
        [m0 * (1.0 + a * p), m0 * a * p1, m0 * a * p2]
    }

    pub fn rho_inf(&self, x: f64) -> [f64; 3] {
        let [p, p1, p2] = self.profile.shape.eval(x);
        let a = self.profile.density_amplitude;
        let r0 = self.gas.rho0;
        [r0 * (1.0 + a * p), r0 * a * p1, r0 * a * p2]
    }

    /// Entropy function `Ā(x2)` and derivatives.
    pub fn a_bar(&self, x: f64) -> [f64; 3] {
        let g = self.gas.gamma;
        let k = g * self.gas.p0 / (g - 1.0);
        let n = match self.convention {
            Convention::Consistent => g,
            Convention::StrictPaper => 1.0,
        };
        inverse_power(k, n, self.rho_inf(x))
    }

    /// Bernoulli function `B̄(x2)` and derivatives.
    pub fn b_bar(&self, x: f64) -> [f64; 3] {
        let g = self.gas.gamma;
        let c = match self.convention {
            Convention::Consistent => g * self.gas.p0 / (g - 1.0),
            Convention::StrictPaper => g * self.gas.p0,
        };
        let [m, m1, m2] = self.m_inf(x);
        let rho = self.rho_inf(x);
        let [r, r1, r2] = rho;
        let v = m / r;
        let v1 = (m1 * r - m * r1) / (r * r);
        let v2 = (m2 * r - m * r2) / (r * r) - 2.0 * r1 * (m1 * r - m * r1) / (r * r * r);
        let [e, e1, e2] = inverse_power(c, 1.0, rho);
        [0.5 * v * v + e, v * v1 + e1, v1 * v1 + v * v2 + e2]
    }

    /// Background constants `A0 = γp0/((γ-1)ρ0^γ)`, `B0 = m0²/(2ρ0²) + γp0/((γ-1)ρ0)`.
    pub fn background(&self) -> (f64, f64) {
        let GasConstants { gamma: g, p0, rho0, m0, .. } = self.gas;
        let a0 = g * p0 / ((g - 1.0) * rho0.powf(g));
        let b0 = m0 * m0 / (2.0 * rho0 * rho0) + g * p0 / ((g - 1.0) * rho0);
        (a0, b0)
    }
}

/// `A(s)`, `B(s)` with first and second derivatives at one stream value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamFunctions {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl StreamFunctions {
    pub fn constant(a: f64, b: f64) -> Self {
        Self { a: [a, 0.0, 0.0], b: [b, 0.0, 0.0] }
    }
}

const KNOT_SPACING: f64 = 0.25;
const X_LOW: f64 = -0.5;
const L_TOL: f64 = 1e-13;

/// `l(x2) = ∫_0^{x2} m∞`, its inverse, and `A`, `B` as functions of the
/// stream value.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamLimitData {
    pub far: FarFieldState,
    pub a0: f64,
    pub b0: f64,
    uniform_momentum: Option<f64>,
    /// `l` at `X_LOW + k * KNOT_SPACING`.
    knots: Vec<f64>,
}

/// Builds `l` on `[-1/2, x_max]`; evaluation beyond the table falls back to
/// adaptive quadrature from the last knot.
pub fn build_stream_limit(far: FarFieldState, x_max: f64) -> StreamLimitData {
    let (a0, b0) = far.background();
    let uniform_momentum = if far.profile.is_uniform() { Some(far.m_inf(0.0)[0]) } else { None };
    let mut knots = Vec::new();
    if uniform_momentum.is_none() {
        let n = ((x_max.max(1.0) - X_LOW) / KNOT_SPACING).ceil() as usize + 2;
        let m = |x: f64| far.m_inf(x)[0];
        // l(X_LOW) = -∫_{X_LOW}^0 m∞, then accumulate panel by panel.
        let mut acc = -integrate_adaptive(&m, X_LOW, 0.0, L_TOL);
        knots.push(acc);
        for k in 0..n {
            let a = X_LOW + k as f64 * KNOT_SPACING;
            acc += integrate_adaptive(&m, a, a + KNOT_SPACING, L_TOL);
            knots.push(acc);
        }
    }
    StreamLimitData { far, a0, b0, uniform_momentum, knots }
}

impl StreamLimitData {
    pub fn gamma(&self) -> f64 {
        self.far.gas.gamma
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform_momentum.is_some()
    }

    fn knot_x(k: usize) -> f64 {
        X_LOW + k as f64 * KNOT_SPACING
    }

    /// `l(x2)`.
    pub fn l(&self, x: f64) -> f64 {
        if let Some(m) = self.uniform_momentum {
            return m * x;
        }
        let m = |t: f64| self.far.m_inf(t)[0];
        if x < X_LOW {
            return self.knots[0] - integrate_adaptive(&m, x, X_LOW, L_TOL);
        }
        let k = (((x - X_LOW) / KNOT_SPACING).floor() as usize).min(self.knots.len() - 1);
        let base = Self::knot_x(k);
        let tail = if x - base <= KNOT_SPACING {
            let (v, err) = gauss_kronrod_15(&m, base, x);
            if err <= L_TOL * (x - base).abs().max(1e-300) {
                v
            } else {
                integrate_adaptive(&m, base, x, L_TOL)
            }
        } else {
            integrate_adaptive(&m, base, x, L_TOL)
        };
        self.knots[k] + tail
    }

    /// `[l, l', l'']` at `x2`.
    pub fn l_derivatives(&self, x: f64) -> [f64; 3] {
        let [m, m1, _] = self.far.m_inf(x);
        [self.l(x), m, m1]
    }

    /// `l⁻¹(s)` by bracketed Newton iteration.
    pub fn l_inv(&self, s: f64) -> Result<f64, FarFieldError> {
        if let Some(m) = self.uniform_momentum {
            return Ok(s / m);
        }
        if !s.is_finite() {
            return Err(FarFieldError::OutOfRange { s });
        }
        let (mut lo, mut hi) = if s < self.knots[0] {
            let mut lo = X_LOW;
            let mut step = 0.1;
            while self.l(lo) > s {
                lo -= step;
                step *= 0.5;
                if lo <= -0.95 {
                    return Err(FarFieldError::OutOfRange { s });
                }
            }
            (lo, X_LOW)
        } else if s > *self.knots.last().unwrap_or(&0.0) {
            let mut hi = Self::knot_x(self.knots.len() - 1);
            let mut lo = hi;
            let mut width = 1.0;
            while self.l(hi) < s {
                lo = hi;
                hi += width;
                width *= 2.0;
                if hi > 1e9 {
                    return Err(FarFieldError::OutOfRange { s });
                }
            }
            (lo, hi)
        } else {
            let k = self.knots.partition_point(|&v| v <= s).saturating_sub(1);
            (Self::knot_x(k), Self::knot_x(k + 1))
        };
        let m0 = self.far.gas.m0;
        let mut x = lo + (s - self.l(lo)) / m0;
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        for _ in 0..100 {
            let r = self.l(x) - s;
            if r.abs() <= 1e-15 * (s.abs() + m0) {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let next = x - r / self.far.m_inf(x)[0];
            x = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * (1.0 + x.abs()) {
                return Ok(x);
            }
        }
        Ok(x)
    }

    /// `A`, `B` and derivatives at stream value `s`.
    pub fn functions(&self, s: f64) -> Result<StreamFunctions, FarFieldError> {
        if self.is_uniform() {
            let a = self.far.a_bar(0.0)[0];
            let b = self.far.b_bar(0.0)[0];
            return Ok(StreamFunctions::constant(a, b));
        }
        let x = self.l_inv(s)?;
        Ok(self.functions_at_height(x))
    }

    /// `A`, `B` at the stream value `l(x2)`, without inverting `l`.
    pub fn functions_at_height(&self, x: f64) -> StreamFunctions {
        let [m, m1, _] = self.far.m_inf(x);
        let chain = |g: [f64; 3]| [g[0], g[1] / m, (g[2] - g[1] * m1 / m) / (m * m)];
        StreamFunctions { a: chain(self.far.a_bar(x)), b: chain(self.far.b_bar(x)) }
    }
}

/// Result of a sampled norm check against a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormCheck {
    pub value: f64,
    pub threshold: f64,
}

impl NormCheck {
    pub fn passes(&self) -> bool {
        self.value <= self.threshold
    }

    pub fn ratio(&self) -> f64 {
        self.value / self.threshold
    }
}

/// Sampled `‖U∞ - U0‖_{2,α;(0);(0,∞)}` against `ε m0`.
pub fn check_farfield_norm(far: &FarFieldState, alpha: f64) -> NormCheck {
    let spec = LineNormSpec::new(2, alpha, 0.0);
    let plan = SamplePlan::default();
    let line = HalfLine::right_of(0.0);
    let GasConstants { m0, rho0, eps, .. } = far.gas;
    let dm = sampled_line_norm(
        |x| {
            let [m, m1, m2] = far.m_inf(x);
            [m - m0, m1, m2]
        },
        &spec,
        line,
        &plan,
    );
    let drho = sampled_line_norm(
        |x| {
            let [r, r1, r2] = far.rho_inf(x);
            [r - rho0, r1, r2]
        },
        &spec,
        line,
        &plan,
    );
    NormCheck { value: dm.total() + drho.total(), threshold: eps * m0 }
}

/// Sampled primed norms `‖A - A0‖'`, `‖B - B0‖'` on `s ∈ (0, ∞)` divided by
/// `ε m0`. The constant bounding them is not known, so only ratios are
/// reported.
pub fn entropy_bernoulli_ratios(stream: &StreamLimitData, alpha: f64) -> (f64, f64) {
    let gas = stream.far.gas;
    if stream.is_uniform() {
        let f = stream.functions(0.0).unwrap_or(StreamFunctions::constant(stream.a0, stream.b0));
        let da = (f.a[0] - stream.a0).abs();
        let db = (f.b[0] - stream.b0).abs();
        return (da / (gas.eps * gas.m0), db / (gas.eps * gas.m0));
    }
    let spec = LineNormSpec::new(2, alpha, 0.0).with_offset(gas.m0);
    let plan = SamplePlan { points: 400, span: stream.l(200.0), ..SamplePlan::default() };
    let xs: Vec<f64> =
        plan.abscissae(HalfLine::right_of(0.0)).into_iter().map(|s| stream.l_inv(s).unwrap_or(f64::NAN)).collect();
    let points = plan.abscissae(HalfLine::right_of(0.0));
    let pairs = plan.pairs(points.len());
    let lookup = |s: f64| -> usize { points.partition_point(|&p| p < s).min(points.len() - 1) };
    let a = crate::geometry::line_norm_on_samples(
        |s| {
            let f = stream.functions_at_height(xs[lookup(s)]);
            [f.a[0] - stream.a0, f.a[1], f.a[2]]
        },
        &spec,
        &points,
        &pairs,
    );
    let b = crate::geometry::line_norm_on_samples(
        |s| {
            let f = stream.functions_at_height(xs[lookup(s)]);
            [f.b[0] - stream.b0, f.b[1], f.b[2]]
        },
        &spec,
        &points,
        &pairs,
    );
    (a.total() / (gas.eps * gas.m0), b.total() / (gas.eps * gas.m0))
}
