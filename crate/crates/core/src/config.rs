//! TOML run configuration. Every section is optional; missing values fall
//! back to the canonical bump case.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::farfield::{Convention, DecayShape, FarFieldProfile, FarFieldState, GasConstants};
use crate::geometry::{build_profile, BoundaryProfile, Grading, NormPolicy, ProfileOptions, ProfileSpec};
use crate::solver::SolverOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("configuration violates {} constraint(s):\n  {}", .0.len(), .0.join("\n  "))]
    ConstraintViolation(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Solve,
    Verify,
    TruncationStudy,
    Mms,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Solve => "solve",
            Mode::Verify => "verify",
            Mode::TruncationStudy => "truncation-study",
            Mode::Mms => "mms",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    /// Lower bound on the corner angles' distance from 0 and π.
    pub delta: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { alpha: 0.8, beta: 0.4, delta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Radius of the ball holding the arc.
    pub d0: f64,
    pub profile: ProfileSpec,
    pub allow_straight_corners: bool,
    pub norm_policy: NormPolicy,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            d0: 2.0,
            profile: ProfileSpec::bump(0.1, 1),
            allow_straight_corners: false,
            norm_policy: NormPolicy::Enforce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    pub r: f64,
    pub h: f64,
    /// Radii for the truncation study; each run uses `H = R` and the grid
    /// spacing of the base run.
    pub study_radii: Vec<f64>,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { r: 8.0, h: 8.0, study_radii: vec![8.0, 16.0, 32.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nz: usize,
    pub grading: f64,
    /// Square grids for the manufactured-solution study.
    pub mms_sizes: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 129, nz: 65, grading: 1.0, mms_sizes: vec![33, 65, 129] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Use the far-field entropy and Bernoulli formulas exactly as printed.
    pub strict_paper: bool,
    pub output: Option<PathBuf>,
    pub gas: GasConstants,
    pub farfield: FarFieldProfile,
    pub weights: Weights,
    pub geometry: GeometryConfig,
    pub truncation: Truncation,
    pub grid: GridConfig,
    pub solver: SolverOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            seed: 0,
            strict_paper: false,
            output: None,
            gas: GasConstants::default(),
            farfield: FarFieldProfile::constant(),
            weights: Weights::default(),
            geometry: GeometryConfig::default(),
            truncation: Truncation::default(),
            grid: GridConfig::default(),
            solver: SolverOptions::default(),
        }
    }
}

fn odd_grid(n: usize) -> bool {
    n >= 9 && n % 2 == 1
}

impl RunConfig {
    pub fn convention(&self) -> Convention {
        if self.strict_paper {
            Convention::StrictPaper
        } else {
            Convention::Consistent
        }
    }

    pub fn profile_options(&self) -> ProfileOptions {
        let mut o = ProfileOptions::new(self.weights.delta, self.geometry.d0, self.weights.alpha, self.weights.beta);
        o.allow_straight_corners = self.geometry.allow_straight_corners;
        o.norm_policy = self.geometry.norm_policy;
        o
    }

    pub fn build_profile(&self) -> Result<BoundaryProfile, crate::geometry::GeometryError> {
        build_profile(self.geometry.profile.clone(), &self.profile_options())
    }

    pub fn far_field(&self) -> Result<FarFieldState, crate::farfield::FarFieldError> {
        FarFieldState::new(self.gas, self.farfield, self.convention())
    }

    pub fn grading(&self) -> Grading {
        Grading { exponent: self.grid.grading }
    }

    /// Every violated constraint, including those found by building the
    /// boundary profile and the far field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.gas.violations();
        let w = &self.weights;
        if !(w.beta > 0.0 && w.beta < w.alpha && w.alpha < 1.0) {
            out.push(format!("weights need 0 < beta < alpha < 1, got alpha = {}, beta = {}", w.alpha, w.beta));
        }
        if !(w.delta >= 0.0 && w.delta < std::f64::consts::FRAC_PI_2) {
            out.push(format!("delta = {} must lie in [0, π/2)", w.delta));
        }
        let limit = self.geometry.d0 + 1.0;
        if !(self.geometry.d0 > 0.0) {
            out.push(format!("d0 = {} must be positive", self.geometry.d0));
        }
        let t = &self.truncation;
        if !(t.r > limit && t.h > limit) {
            out.push(format!("truncation R = {}, H = {} must exceed D0 + 1 = {limit}", t.r, t.h));
        }
        if !t.study_radii.iter().all(|&r| r > limit) || t.study_radii.windows(2).any(|p| !(p[1] > p[0])) {
            out.push(format!("study radii {:?} must increase and exceed D0 + 1 = {limit}", t.study_radii));
        }
        if self.mode == Mode::TruncationStudy && t.study_radii.len() < 2 {
            out.push("truncation study needs at least two radii".into());
        }
        let g = &self.grid;
        if !(odd_grid(g.nx) && odd_grid(g.nz)) {
            out.push(format!("grid {}x{} must have odd node counts of at least 9", g.nx, g.nz));
        }
        if !(g.grading >= 1.0) {
            out.push(format!("grading exponent {} must be at least 1", g.grading));
        }
        if !g.mms_sizes.iter().all(|&n| odd_grid(n)) || g.mms_sizes.windows(2).any(|p| p[1] <= p[0]) {
            out.push(format!("mms sizes {:?} must be increasing odd counts of at least 9", g.mms_sizes));
        }
        if self.mode == Mode::Mms && g.mms_sizes.len() < 2 {
            out.push("mms mode needs at least two grid sizes".into());
        }
        let s = &self.solver;
        if !(s.relaxation > 0.0 && s.relaxation <= 1.0 && s.min_relaxation > 0.0 && s.min_relaxation <= s.relaxation) {
            out.push(format!(
                "relaxation {} / minimum {} must satisfy 0 < min <= relaxation <= 1",
                s.relaxation, s.min_relaxation
            ));
        }
        if let Some(tol) = s.tol_outer {
            if !(tol > 0.0) {
                out.push(format!("tol_outer = {tol} must be positive"));
            }
        }
        if !(s.tol_pde_factor >= 1.0) {
            out.push(format!("tol_pde_factor = {} must be at least 1", s.tol_pde_factor));
        }
        if s.max_iterations == 0 {
            out.push("max_iterations must be positive".into());
        }
        if !(1..=20).contains(&s.quadrature_points) {
            out.push(format!("quadrature_points = {} must lie in 1..=20", s.quadrature_points));
        }
        if !(s.linear.tolerance > 0.0 && s.linear.tolerance < 1.0) || s.linear.max_iterations == 0 {
            out.push(format!(
                "linear solver tolerance {} must lie in (0, 1) with a positive iteration cap",
                s.linear.tolerance
            ));
        }
        let shape_ok = match self.farfield.shape {
            DecayShape::Constant => true,
            DecayShape::Exponential { length } => length > 0.0,
            DecayShape::Algebraic { power } => power > 0.0,
        };
        if !shape_ok {
            out.push(format!("far-field shape {:?} needs a positive parameter", self.farfield.shape));
        }
        // Only meaningful once the scalar constraints hold.
        if out.is_empty() {
            if let Err(e) = self.build_profile() {
                out.push(format!("boundary profile: {e}"));
            }
            match self.far_field() {
                Ok(far) => {
                    let check = crate::farfield::check_farfield_norm(&far, w.alpha);
                    if !check.passes() {
                        out.push(format!(
                            "far-field perturbation norm {:.3e} exceeds eps * m0 = {:.3e}",
                            check.value, check.threshold
                        ));
                    }
                }
                Err(e) => out.push(format!("far field: {e}")),
            }
        }
        out
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::ConstraintViolation(v))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"
mode = "verify"
seed = 7

[gas]
gamma = 1.4
p0 = 1.0
rho0 = 1.0
m_star = 0.5
m0 = 0.1
eps = 1e-3

[farfield]
shape = { kind = "constant" }

[weights]
alpha = 0.8
beta = 0.4
delta = 0.1

[geometry]
d0 = 2.0
profile = { minus = "flat", arc = { poly-bump = { amplitude = 0.1, power = 1 } }, plus = "flat" }

[truncation]
r = 8.0
h = 8.0

[grid]
nx = 129
nz = 65

[solver]
scheme = "linearized"
max_iterations = 50
"#;

    #[test]
    fn canonical_config_is_valid() {
        let cfg = parse_config(CANONICAL).unwrap();
        assert_eq!(cfg.mode, Mode::Verify);
        assert_eq!(cfg.geometry.profile, ProfileSpec::bump(0.1, 1));
        assert_eq!(cfg.solver.max_iterations, 50);
        assert_eq!(cfg.seed, 7);
        let empty = parse_config("").unwrap();
        assert_eq!(empty.geometry, cfg.geometry);
    }

    #[test]
    fn fast_flow_is_rejected() {
        let text = CANONICAL.replace("m0 = 0.1", "m0 = 0.6");
        let Err(ConfigError::ConstraintViolation(v)) = parse_config(&text) else { panic!() };
        assert!(v.iter().any(|s| s.contains("m0 = 0.6")), "{v:?}");
    }

    #[test]
    fn all_violations_are_listed() {
        let text =
            CANONICAL.replace("beta = 0.4", "beta = 0.9").replace("nx = 129", "nx = 128").replace("r = 8.0", "r = 2.0");
        let Err(ConfigError::ConstraintViolation(v)) = parse_config(&text) else { panic!() };
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v[0].contains("beta"));
    }

    #[test]
    fn unknown_keys_and_bad_syntax_are_parse_errors() {
        assert!(matches!(parse_config("[gas]\ngama = 1.4\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config("mode = \"fly\""), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config("[[["), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn geometry_failures_are_constraints() {
        let text = CANONICAL.replace("amplitude = 0.1, power = 1", "amplitude = 3.0, power = 1");
        let Err(ConfigError::ConstraintViolation(v)) = parse_config(&text) else { panic!() };
        assert!(v[0].starts_with("boundary profile"), "{v:?}");
    }

    #[test]
    fn roundtrip_through_toml() {
        let cfg = parse_config(CANONICAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
