//! Half-plane domain with a piecewise lower boundary, its truncation to a
//! box, and the boundary-fitted grid the solver works on.

mod domain;
mod grid;
pub mod line_norm;
mod profile;

pub use domain::{truncate, TruncatedDomain};
pub use grid::{
    generate_grid, generate_rectangle_grid, CurvilinearGrid, Grading, InverseMetrics, MapDerivatives, NodeTag, Stencil,
};
pub use line_norm::{
    line_norm_on_samples, sampled_line_norm, HalfLine, LineNormBreakdown, LineNormSpec, PairWeight, SamplePlan,
};
pub use profile::{build_profile, BoundaryProfile, Corner, NormPolicy, PieceFamily, ProfileOptions, ProfileSpec, Side};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("corner angle at {corner} is {angle:.6} rad, outside ({delta}, π - {delta})")]
    AngleViolation { corner: Corner, angle: f64, delta: f64 },
    #[error("boundary height {value:.6e} at x1 = {x:.6} is not above -1/2")]
    HeightViolation { x: f64, value: f64 },
    #[error("sampled weighted norm of the {side} tail is {value:.6e} > 1")]
    NormViolation { side: &'static str, value: f64 },
    #[error("boundary pieces do not meet at {corner} (gap {gap:.3e})")]
    DiscontinuousBoundary { corner: Corner, gap: f64 },
    #[error("arc point at x1 = {x:.6} has radius {radius:.6} > D0 = {d0}")]
    ArcOutsideBall { x: f64, radius: f64, d0: f64 },
    #[error("truncation R = {r}, H = {h} must both exceed D0 + 1 = {limit}")]
    TruncationTooSmall { r: f64, h: f64, limit: f64 },
    #[error("map Jacobian {value:.3e} is not positive at node ({i}, {j})")]
    JacobianNonPositive { i: usize, j: usize, value: f64 },
    #[error("boundary kink at x1 = {x} does not coincide with a grid column")]
    CornerOffGrid { x: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
