//! Piecewise lower boundary `Γ_- ∪ arc ∪ Γ_+` and its admissibility checks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::line_norm::{sampled_line_norm, HalfLine, LineNormSpec, SamplePlan};
use super::GeometryError;

/// Analytic family for one piece of the boundary graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceFamily {
    /// `f ≡ 0`.
    Flat,
    /// `a (1 - x²)^k`, used for the arc on `[-1, 1]`.
    PolyBump { amplitude: f64, power: u32 },
    /// `Σ c_i x^i`.
    Polynomial(Vec<f64>),
    /// `a |x|^{-p}`, used for the tails on `|x| ≥ 1`.
    RationalDecay { amplitude: f64, power: f64 },
}

impl PieceFamily {
    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        match self {
            PieceFamily::Flat => [0.0; 3],
            PieceFamily::PolyBump { amplitude, power } => {
                let a = *amplitude;
                let k = *power as i32;
                let w = 1.0 - x * x;
                if k == 0 {
                    return [a, 0.0, 0.0];
                }
                let kf = k as f64;
                let f = a * w.powi(k);
                let d1 = -2.0 * a * kf * x * w.powi(k - 1);
                let d2 = if k >= 2 {
                    a * (4.0 * kf * (kf - 1.0) * x * x * w.powi(k - 2) - 2.0 * kf * w.powi(k - 1))
                } else {
                    -2.0 * a
                };
                [f, d1, d2]
            }
            PieceFamily::Polynomial(c) => {
                let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &ci in c.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + f;
                    f = f * x + ci;
                }
                [f, d1, d2]
            }
            PieceFamily::RationalDecay { amplitude, power } => {
                let ax = x.abs();
                let f = amplitude * ax.powf(-power);
                let d1 = -power * amplitude * ax.powf(-power - 1.0) * x.signum();
                let d2 = power * (power + 1.0) * amplitude * ax.powf(-power - 2.0);
                [f, d1, d2]
            }
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            PieceFamily::Flat => true,
            PieceFamily::PolyBump { amplitude, .. } | PieceFamily::RationalDecay { amplitude, .. } => *amplitude == 0.0,
            PieceFamily::Polynomial(c) => c.iter().all(|&v| v == 0.0),
        }
    }
}

/// Descriptor for the three boundary pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub minus: PieceFamily,
    pub arc: PieceFamily,
    pub plus: PieceFamily,
}

impl ProfileSpec {
    pub fn flat() -> Self {
        Self { minus: PieceFamily::Flat, arc: PieceFamily::Flat, plus: PieceFamily::Flat }
    }

    /// `a (1 - x²)^k` on the arc, flat tails.
    pub fn bump(amplitude: f64, power: u32) -> Self {
        Self { minus: PieceFamily::Flat, arc: PieceFamily::PolyBump { amplitude, power }, plus: PieceFamily::Flat }
    }
}

/// What to do when a sampled tail norm exceeds one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormPolicy {
    #[default]
    Enforce,
    Warn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOptions {
    pub delta: f64,
    pub d0: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Accept corner angles equal to π (straight or tangential joins).
    pub allow_straight_corners: bool,
    pub norm_policy: NormPolicy,
    pub samples_per_piece: usize,
}

impl ProfileOptions {
    pub fn new(delta: f64, d0: f64, alpha: f64, beta: f64) -> Self {
        Self {
            delta,
            d0,
            alpha,
            beta,
            allow_straight_corners: false,
            norm_policy: NormPolicy::Enforce,
            samples_per_piece: 2000,
        }
    }

    pub fn allow_straight_corners(mut self) -> Self {
        self.allow_straight_corners = true;
        self
    }
}

/// Which side of a corner to evaluate a one-sided derivative on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Corner label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    Minus,
    Plus,
}

impl std::fmt::Display for Corner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Corner::Minus => write!(f, "A-"),
            Corner::Plus => write!(f, "A+"),
        }
    }
}

/// Validated lower boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProfile {
    pub spec: ProfileSpec,
    pub d0: f64,
    pub delta: f64,
    pub corner_minus: [f64; 2],
    pub corner_plus: [f64; 2],
    /// Interior (fluid-side) angles at `A_-` and `A_+`.
    pub angle_minus: f64,
    pub angle_plus: f64,
    /// Sampled `‖f_∓‖_{2,α;(α+β)}` for the two tails.
    pub tail_norms: [f64; 2],
    pub warnings: Vec<String>,
}

const CONTINUITY_TOL: f64 = 1e-12;
const STRAIGHT_TOL: f64 = 1e-9;
const KINK_TOL: f64 = 1e-10;

impl BoundaryProfile {
    /// Boundary height and derivatives at `x`. At `x = ±1` the arc is used.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        if x < -1.0 {
            self.spec.minus.eval(x)
        } else if x > 1.0 {
            self.spec.plus.eval(x)
        } else {
            self.spec.arc.eval(x)
        }
    }

    /// One-sided evaluation; differs from [`eval`](Self::eval) only at `x = ±1`.
    pub fn eval_side(&self, x: f64, side: Side) -> [f64; 3] {
        match (side, x) {
            (Side::Left, x) if x == -1.0 => self.spec.minus.eval(x),
            (Side::Right, x) if x == 1.0 => self.spec.plus.eval(x),
            _ => self.eval(x),
        }
    }

    pub fn height(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    /// Abscissae where the first or second derivative jumps.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for x in [-1.0, 1.0] {
            let l = self.eval_side(x, Side::Left);
            let r = self.eval_side(x, Side::Right);
            let (l, r) = if x < 0.0 { (l, self.spec.arc.eval(x)) } else { (self.spec.arc.eval(x), r) };
            if (l[1] - r[1]).abs() > KINK_TOL || (l[2] - r[2]).abs() > KINK_TOL {
                out.push(x);
            }
        }
        out
    }

    pub fn corner(&self, which: Corner) -> [f64; 2] {
        match which {
            Corner::Minus => self.corner_minus,
            Corner::Plus => self.corner_plus,
        }
    }

    pub fn angle(&self, which: Corner) -> f64 {
        match which {
            Corner::Minus => self.angle_minus,
            Corner::Plus => self.angle_plus,
        }
    }

    /// Direction angles (w.r.t. the x₁ axis) of the tangents leaving the
    /// corner along the tail and along the arc.
    pub fn corner_tangents(&self, which: Corner) -> (f64, f64) {
        match which {
            Corner::Minus => {
                let tail = PI + self.spec.minus.eval(-1.0)[1].atan();
                let arc = self.spec.arc.eval(-1.0)[1].atan();
                (tail, arc)
            }
            Corner::Plus => {
                let tail = self.spec.plus.eval(1.0)[1].atan();
                let arc = PI + self.spec.arc.eval(1.0)[1].atan();
                (tail, arc)
            }
        }
    }
}

/// Interior angle at a corner from one-sided slopes.
fn corner_angles(spec: &ProfileSpec) -> (f64, f64) {
    let minus = PI + spec.minus.eval(-1.0)[1].atan() - spec.arc.eval(-1.0)[1].atan();
    let plus = PI + spec.arc.eval(1.0)[1].atan() - spec.plus.eval(1.0)[1].atan();
    (minus, plus)
}

/// Builds and validates a boundary profile.
pub fn build_profile(spec: ProfileSpec, options: &ProfileOptions) -> Result<BoundaryProfile, GeometryError> {
    if !(options.delta >= 0.0 && options.delta < PI / 2.0) {
        return Err(GeometryError::InvalidParameter(format!("delta = {} must lie in [0, π/2)", options.delta)));
    }
    if !(options.d0 > 0.0) {
        return Err(GeometryError::InvalidParameter(format!("D0 = {} must be positive", options.d0)));
    }
    let n = options.samples_per_piece.max(1000);

    for (corner, x, tail) in [(Corner::Minus, -1.0, &spec.minus), (Corner::Plus, 1.0, &spec.plus)] {
        let a = spec.arc.eval(x)[0];
        let t = tail.eval(x)[0];
        let gap = (a - t).abs();
        if !(gap <= CONTINUITY_TOL * (1.0 + a.abs())) {
            return Err(GeometryError::DiscontinuousBoundary { corner, gap });
        }
    }

    let (angle_minus, angle_plus) = corner_angles(&spec);
    for (corner, angle) in [(Corner::Minus, angle_minus), (Corner::Plus, angle_plus)] {
        let straight = (angle - PI).abs() <= STRAIGHT_TOL;
        let inside = angle > options.delta && angle < PI - options.delta;
        if !(inside || (straight && options.allow_straight_corners)) {
            return Err(GeometryError::AngleViolation { corner, angle, delta: options.delta });
        }
    }

    let plan = SamplePlan::default().with_points(n);
    let arc_points = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64);
    let minus_points = plan.abscissae(HalfLine::left_of(-1.0));
    let plus_points = plan.abscissae(HalfLine::right_of(1.0));
    let checks = arc_points
        .map(|x| (x, spec.arc.eval(x)[0]))
        .chain(minus_points.iter().map(|&x| (x, spec.minus.eval(x)[0])))
        .chain(plus_points.iter().map(|&x| (x, spec.plus.eval(x)[0])));
    for (x, value) in checks {
        if !(value > -0.5) {
            return Err(GeometryError::HeightViolation { x, value });
        }
    }

    for i in 0..n {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let y = spec.arc.eval(x)[0];
        let radius = x.hypot(y);
        if radius > options.d0 * (1.0 + 1e-12) {
            return Err(GeometryError::ArcOutsideBall { x, radius, d0: options.d0 });
        }
    }

    let norm_spec = LineNormSpec::new(2, options.alpha, options.alpha + options.beta);
    let minus_norm = sampled_line_norm(|x| spec.minus.eval(x), &norm_spec, HalfLine::left_of(-1.0), &plan).total();
    let plus_norm = sampled_line_norm(|x| spec.plus.eval(x), &norm_spec, HalfLine::right_of(1.0), &plan).total();
    let mut warnings = Vec::new();
    for (side, value) in [("minus", minus_norm), ("plus", plus_norm)] {
        if value > 1.0 {
            match options.norm_policy {
                NormPolicy::Enforce => return Err(GeometryError::NormViolation { side, value }),
                NormPolicy::Warn => {
                    let msg = format!("sampled weighted norm of the {side} tail is {value:.6e} > 1");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
        }
    }

    let corner_minus = [-1.0, spec.minus.eval(-1.0)[0]];
    let corner_plus = [1.0, spec.plus.eval(1.0)[0]];
    Ok(BoundaryProfile {
        spec,
        d0: options.d0,
        delta: options.delta,
        corner_minus,
        corner_plus,
        angle_minus,
        angle_plus,
        tail_norms: [minus_norm, plus_norm],
        warnings,
    })
}
