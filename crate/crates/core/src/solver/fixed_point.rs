//! The outer iteration `ψ_{k+1} = (1 - ω) ψ_k + ω T(ψ_k)` on the unknown
//! `u = ψ - l`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boundary::DirichletData;
use super::divergence::solve_divergence_step;
use super::linear::{solve_linear, LinearEllipticProblem};
use super::sparse::LinearSolverOptions;
use super::SolverError;
use crate::farfield::StreamLimitData;
use crate::geometry::{CurvilinearGrid, Stencil};
use crate::quadrature::GaussLegendre;
use crate::thermo::{coefficients, solve_density, CoefficientBundle, ThermoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterationScheme {
    /// Coefficients frozen at `ψ_k` plus the lower-order terms `b_i`, `b0`
    /// from the integral form of the difference `a22 l'' - F`.
    #[default]
    Linearized,
    /// Coefficients and source frozen at `ψ_k`.
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    #[default]
    Nondivergence,
    /// Flux form `∇·(∇ψ/ρ) = B'ρ - A'ρ^γ/γ`; always iterated by Picard.
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub scheme: IterationScheme,
    pub discretization: Discretization,
    pub relaxation: f64,
    pub min_relaxation: f64,
    /// Absolute bound on `‖ψ_{k+1} - ψ_k‖_∞`; `None` means `1e-9 m0`.
    pub tol_outer: Option<f64>,
    /// Nonlinear residual bound as a multiple of `tol_outer`.
    pub tol_pde_factor: f64,
    pub max_iterations: usize,
    pub quadrature_points: usize,
    pub linear: LinearSolverOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            scheme: IterationScheme::Linearized,
            discretization: Discretization::Nondivergence,
            relaxation: 1.0,
            min_relaxation: 1.0 / 64.0,
            tol_outer: None,
            tol_pde_factor: 10.0,
            max_iterations: 200,
            quadrature_points: 5,
            linear: LinearSolverOptions::default(),
        }
    }
}

/// Far-field shear evaluated at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub l: Vec<f64>,
    /// `l' = m∞`.
    pub m: Vec<f64>,
    pub l2: Vec<f64>,
    /// `a22(l) l'' - F(l)`; zero up to rounding for a consistent far field.
    pub defect: Vec<f64>,
}

/// Grid, far field and cutoff radius of one flow problem.
#[derive(Debug, Clone, Copy)]
pub struct FlowProblem<'a> {
    pub grid: &'a CurvilinearGrid,
    pub stream: &'a StreamLimitData,
    pub d0: f64,
}

impl<'a> FlowProblem<'a> {
    pub fn new(grid: &'a CurvilinearGrid, stream: &'a StreamLimitData, d0: f64) -> Self {
        Self { grid, stream, d0 }
    }

    pub fn boundary(&self) -> DirichletData<'a> {
        DirichletData::new(self.d0, self.stream)
    }

    pub fn background(&self) -> Result<Background, SolverError> {
        let gamma = self.stream.gamma();
        let rows: Vec<Result<[f64; 4], ThermoError>> = self
            .grid
            .nodes
            .par_iter()
            .map(|x| {
                let [l, m, l2] = self.stream.l_derivatives(x[1]);
                let f = self.stream.functions_at_height(x[1]);
                let d = solve_density(0.5 * m * m, gamma, &f)?;
                let c = coefficients([0.0, m], gamma, &f, d);
                Ok([l, m, l2, c.a22 * l2 - c.f])
            })
            .collect();
        let mut bg = Background { l: Vec::new(), m: Vec::new(), l2: Vec::new(), defect: Vec::new() };
        for r in rows {
            let [l, m, l2, d] = r?;
            bg.l.push(l);
            bg.m.push(m);
            bg.l2.push(l2);
            bg.defect.push(d);
        }
        Ok(bg)
    }

    /// Coefficients at stream value `psi` and gradient `grad`.
    pub fn coefficients_at(&self, psi: f64, grad: [f64; 2]) -> Result<CoefficientBundle, ThermoError> {
        let f = self.stream.functions(psi)?;
        let gamma = self.stream.gamma();
        let d = solve_density(0.5 * (grad[0] * grad[0] + grad[1] * grad[1]), gamma, &f)?;
        Ok(coefficients(grad, gamma, &f, d))
    }
}

enum NodeFailure {
    Subsonic(usize),
    Quadrature(usize, f64),
    Other(ThermoError),
}

fn classify(k: usize, e: ThermoError) -> NodeFailure {
    match e {
        ThermoError::SupersonicChi { .. } => NodeFailure::Subsonic(k),
        e => NodeFailure::Other(e),
    }
}

fn collect_failures(grid: &CurvilinearGrid, failures: Vec<NodeFailure>, min_margin: f64) -> SolverError {
    let mut nodes = Vec::new();
    for f in failures {
        match f {
            NodeFailure::Subsonic(k) => nodes.push(grid.ij(k)),
            NodeFailure::Quadrature(k, s) => {
                if nodes.is_empty() {
                    let (i, j) = grid.ij(k);
                    return SolverError::QuadratureStateSupersonic { i, j, s };
                }
            }
            NodeFailure::Other(e) => return SolverError::Thermo(e),
        }
    }
    SolverError::SubsonicViolation { nodes, min_margin }
}

struct NodeRow {
    k: usize,
    a: [f64; 3],
    b: [f64; 3],
    rhs: f64,
    margin: f64,
}

/// Linear problem for `ψ̃ - l` at the iterate `ψ_k = l + u`, together with
/// the smallest sonic margin over interior nodes.
pub fn assemble_linearized(
    problem: &FlowProblem<'_>,
    bg: &Background,
    u: &[f64],
    scheme: IterationScheme,
    quadrature_points: usize,
) -> Result<(LinearEllipticProblem, f64), SolverError> {
    let grid = problem.grid;
    let n = grid.len();
    let gl = GaussLegendre::new(quadrature_points.max(1));
    let interior: Vec<usize> = (0..n).filter(|&k| !grid.is_boundary(grid.ij(k).0, grid.ij(k).1)).collect();
    let rows: Vec<Result<NodeRow, NodeFailure>> = interior
        .par_iter()
        .map(|&k| {
            let (i, j) = grid.ij(k);
            let d = grid.derivatives(u, i, j);
            let grad = [d[0], bg.m[k] + d[1]];
            let c = problem.coefficients_at(bg.l[k] + u[k], grad).map_err(|e| classify(k, e))?;
            let a = [c.a11, c.a12, c.a22];
            let margin = c.density.sonic_margin;
            match scheme {
                IterationScheme::Picard => Ok(NodeRow { k, a, b: [0.0; 3], rhs: c.f - c.a22 * bg.l2[k], margin }),
                IterationScheme::Linearized => {
                    let mut b = [0.0; 3];
                    for (&s, &w) in gl.nodes.iter().zip(&gl.weights) {
                        let cs = problem.coefficients_at(bg.l[k] + s * u[k], [s * d[0], bg.m[k] + s * d[1]]).map_err(
                            |e| match e {
                                ThermoError::SupersonicChi { .. } => NodeFailure::Quadrature(k, s),
                                e => NodeFailure::Other(e),
                            },
                        )?;
                        b[0] += w * (bg.l2[k] * cs.da22_dpsi - cs.df_dpsi);
                        b[1] += w * (bg.l2[k] * cs.da22_dgrad[0] - cs.df_dgrad[0]);
                        b[2] += w * (bg.l2[k] * cs.da22_dgrad[1] - cs.df_dgrad[1]);
                    }
                    Ok(NodeRow { k, a, b, rhs: -bg.defect[k], margin })
                }
            }
        })
        .collect();
    let mut lp = LinearEllipticProblem::laplace(n);
    lp.dirichlet = problem.boundary().boundary_trace(grid);
    let mut min_margin = f64::INFINITY;
    let mut failures = Vec::new();
    for r in rows {
        match r {
            Ok(row) => {
                let k = row.k;
                lp.a11[k] = row.a[0];
                lp.a12[k] = row.a[1];
                lp.a22[k] = row.a[2];
                lp.b0[k] = row.b[0];
                lp.b1[k] = row.b[1];
                lp.b2[k] = row.b[2];
                lp.rhs[k] = row.rhs;
                min_margin = min_margin.min(row.margin);
            }
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        return Err(collect_failures(grid, failures, min_margin));
    }
    Ok((lp, min_margin))
}

/// Discrete residual of `a_ij(ψ) ψ_ij = F(ψ)` at the interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    /// `max |residual| / |diagonal weight|`, in units of `ψ`.
    pub normalized: f64,
    pub max_abs: f64,
    pub min_margin: f64,
}

pub fn nonlinear_residual(
    problem: &FlowProblem<'_>,
    bg: &Background,
    u: &[f64],
) -> Result<ResidualSummary, SolverError> {
    let grid = problem.grid;
    let rows: Vec<Result<(f64, f64, f64), NodeFailure>> = (0..grid.len())
        .into_par_iter()
        .filter(|&k| {
            let (i, j) = grid.ij(k);
            !grid.is_boundary(i, j)
        })
        .map(|k| {
            let (i, j) = grid.ij(k);
            let d = grid.derivatives(u, i, j);
            let c = problem.coefficients_at(bg.l[k] + u[k], [d[0], bg.m[k] + d[1]]).map_err(|e| classify(k, e))?;
            let res = c.a11 * d[2] + 2.0 * c.a12 * d[3] + c.a22 * (d[4] + bg.l2[k]) - c.f;
            let st = grid.stencil(i, j);
            let c0 = Stencil::CENTER;
            let diag = c.a11 * st.dx1x1[c0] + 2.0 * c.a12 * st.dx1x2[c0] + c.a22 * st.dx2x2[c0];
            Ok((res.abs(), res.abs() / diag.abs(), c.density.sonic_margin))
        })
        .collect();
    let mut s = ResidualSummary { normalized: 0.0, max_abs: 0.0, min_margin: f64::INFINITY };
    let mut failures = Vec::new();
    for r in rows {
        match r {
            Ok((a, n, m)) => {
                s.max_abs = s.max_abs.max(a);
                s.normalized = s.normalized.max(n);
                s.min_margin = s.min_margin.min(m);
            }
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        return Err(collect_failures(grid, failures, s.min_margin));
    }
    Ok(s)
}

/// One outer iteration as reported on the progress stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖ψ_{k+1} - ψ_k‖_∞`.
    pub update: f64,
    /// `‖T(ψ_k) - ψ_k‖_∞`.
    pub fixed_point_residual: f64,
    pub relaxation: f64,
    pub min_sonic_margin: f64,
    pub linear_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub tol_outer: f64,
    pub tol_pde: f64,
    /// Final nonlinear residual in units of `ψ`.
    pub pde_residual: f64,
    /// Geometric mean of the update ratios over the last five iterations.
    pub tail_ratio: Option<f64>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn update_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.update).collect()
    }

    /// Successive ratios `update_{k+1} / update_k`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.records.windows(2).map(|w| w[1].update / w[0].update).collect()
    }

    pub fn min_sonic_margin(&self) -> f64 {
        self.records.iter().map(|r| r.min_sonic_margin).fold(f64::INFINITY, f64::min)
    }

    fn finish_tail(&mut self) {
        let ratios: Vec<f64> = self.contraction_ratios().into_iter().filter(|r| r.is_finite() && *r > 0.0).collect();
        if ratios.is_empty() {
            return;
        }
        let tail = &ratios[ratios.len().saturating_sub(5)..];
        let g = (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp();
        self.tail_ratio = Some(g);
        if g >= 0.9 {
            self.warnings.push(format!("slow contraction: tail update ratio {g:.3} >= 0.9"));
        }
    }
}

/// Converged unknown `u = ψ - l`, the stream function and the report.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub u: Vec<f64>,
    pub psi: Vec<f64>,
    pub background: Background,
    pub report: SolveReport,
}

/// Applies `T` once: returns `T(u)`, the linear residual and the sonic margin.
fn apply_t(
    problem: &FlowProblem<'_>,
    bg: &Background,
    u: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, f64, f64), SolverError> {
    match opts.discretization {
        Discretization::Nondivergence => {
            let (lp, margin) = assemble_linearized(problem, bg, u, opts.scheme, opts.quadrature_points)?;
            let (t, sol) = solve_linear(problem.grid, &lp, &opts.linear)?;
            Ok((t, sol.relative_residual, margin))
        }
        Discretization::Divergence => solve_divergence_step(problem, bg, u, &opts.linear),
    }
}

/// Runs the outer iteration from the transfinite extension of the boundary
/// data. `progress` sees every iteration as it completes.
pub fn fixed_point_solve(
    problem: &FlowProblem<'_>,
    opts: &SolverOptions,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<FlowSolution, SolverError> {
    let bg = problem.background()?;
    let u0 = problem.boundary().initial_guess(problem.grid);
    fixed_point_from(problem, bg, u0, opts, progress)
}

/// Outer iteration from a given initial `u`.
pub fn fixed_point_from(
    problem: &FlowProblem<'_>,
    bg: Background,
    mut u: Vec<f64>,
    opts: &SolverOptions,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<FlowSolution, SolverError> {
    let tol_outer = opts.tol_outer.unwrap_or(1e-9 * problem.stream.far.gas.m0);
    let tol_pde = opts.tol_pde_factor * tol_outer;
    let mut report = SolveReport {
        records: Vec::new(),
        converged: false,
        tol_outer,
        tol_pde,
        pde_residual: f64::NAN,
        tail_ratio: None,
        warnings: Vec::new(),
    };
    let mut omega = opts.relaxation.clamp(opts.min_relaxation, 1.0);
    let mut previous = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let (t, linear_residual, margin) = apply_t(problem, &bg, &u, opts)?;
        let fp = t.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if !fp.is_finite() {
            return Err(SolverError::LinearSolveDiverged { residual: f64::NAN, target: opts.linear.tolerance });
        }
        if fp > previous && omega > opts.min_relaxation {
            omega = (0.5 * omega).max(opts.min_relaxation);
            report
                .warnings
                .push(format!("iteration {iteration}: fixed-point residual increased; relaxation halved to {omega}"));
        }
        previous = fp;
        for (ui, ti) in u.iter_mut().zip(&t) {
            *ui += omega * (ti - *ui);
        }
        let record = IterationRecord {
            iteration,
            update: omega * fp,
            fixed_point_residual: fp,
            relaxation: omega,
            min_sonic_margin: margin,
            linear_residual,
        };
        log::debug!("outer iteration {iteration}: update {:.3e}, margin {:.3e}", record.update, margin);
        progress(&record);
        report.records.push(record);
        if record.update < tol_outer {
            let residual = match opts.discretization {
                Discretization::Nondivergence => nonlinear_residual(problem, &bg, &u)?.normalized,
                Discretization::Divergence => record.update,
            };
            report.pde_residual = residual;
            if residual <= tol_pde {
                report.converged = true;
                break;
            }
            log::info!("update below tolerance but nonlinear residual {residual:.3e} > {tol_pde:.3e}; continuing");
        }
    }
    report.finish_tail();
    if !report.converged {
        let update = report.records.last().map_or(f64::NAN, |r| r.update);
        return Err(SolverError::MaxIterationsExceeded { iterations: report.iterations(), update });
    }
    let psi = u.iter().zip(&bg.l).map(|(u, l)| u + l).collect();
    Ok(FlowSolution { u, psi, background: bg, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::{build_stream_limit, Convention, FarFieldProfile, FarFieldState, GasConstants};
    use crate::geometry::{build_profile, generate_grid, truncate, Grading, ProfileOptions, ProfileSpec};

    fn stream(profile: FarFieldProfile) -> StreamLimitData {
        build_stream_limit(FarFieldState::new(GasConstants::default(), profile, Convention::Consistent).unwrap(), 12.0)
    }

    fn grid(spec: ProfileSpec, nx: usize, nz: usize) -> CurvilinearGrid {
        let opts = ProfileOptions::new(0.1, 2.0, 0.8, 0.4).allow_straight_corners();
        let profile = build_profile(spec, &opts).unwrap();
        generate_grid(&truncate(profile, 4.0, 4.0).unwrap(), nx, nz, Grading::uniform()).unwrap()
    }

    #[test]
    fn background_defect_vanishes_for_sheared_far_field() {
        let s = stream(FarFieldProfile::exponential_momentum(1e-4, 1.0));
        let g = grid(ProfileSpec::flat(), 17, 17);
        let bg = FlowProblem::new(&g, &s, 2.0).background().unwrap();
        let scale = bg.l2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        for d in &bg.defect {
            assert!(d.abs() <= 1e-12 * scale.max(1e-12) + 1e-16, "defect {d}");
        }
    }

    #[test]
    fn flat_constant_case_is_fixed_in_one_iteration() {
        let s = stream(FarFieldProfile::constant());
        let g = grid(ProfileSpec::flat(), 17, 17);
        let p = FlowProblem::new(&g, &s, 2.0);
        let sol = fixed_point_solve(&p, &SolverOptions::default(), &mut |_| {}).unwrap();
        assert_eq!(sol.report.iterations(), 1);
        assert!(sol.u.iter().all(|&v| v == 0.0));
        for (k, x) in g.nodes.iter().enumerate() {
            assert!((sol.psi[k] - 0.1 * x[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn background_iterate_has_no_lower_order_terms() {
        let s = stream(FarFieldProfile::constant());
        let g = grid(ProfileSpec::bump(0.1, 2), 17, 17);
        let p = FlowProblem::new(&g, &s, 2.0);
        let bg = p.background().unwrap();
        let (lp, margin) = assemble_linearized(&p, &bg, &vec![0.0; g.len()], IterationScheme::Linearized, 5).unwrap();
        assert!(lp.b0.iter().chain(&lp.b1).chain(&lp.b2).all(|&b| b == 0.0));
        assert!((margin - 1.39).abs() < 1e-12);
    }

    #[test]
    fn quadrature_order_does_not_matter_on_smooth_iterates() {
        let s = stream(FarFieldProfile::exponential_momentum(1e-3, 1.0));
        let g = grid(ProfileSpec::bump(0.1, 2), 17, 17);
        let p = FlowProblem::new(&g, &s, 2.0);
        let bg = p.background().unwrap();
        let u: Vec<f64> = g.nodes.iter().map(|x| 1e-3 * (-x[0] * x[0] - x[1]).exp()).collect();
        let (a, _) = assemble_linearized(&p, &bg, &u, IterationScheme::Linearized, 5).unwrap();
        let (b, _) = assemble_linearized(&p, &bg, &u, IterationScheme::Linearized, 9).unwrap();
        let scale = b.b0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        for (x, y) in a.b0.iter().zip(&b.b0) {
            assert!((x - y).abs() <= 1e-8 * scale);
        }
        // (x2 + 1)² |b0| stays of order m0.
        let weighted = g.nodes.iter().zip(&a.b0).map(|(x, b)| (x[1] + 1.0).powi(2) * b.abs()).fold(0.0, f64::max);
        assert!(weighted.is_finite() && weighted < 10.0 * 0.1);
    }

    #[test]
    fn bump_converges_and_schemes_agree() {
        let s = stream(FarFieldProfile::constant());
        let g = grid(ProfileSpec::bump(0.1, 2), 33, 33);
        let p = FlowProblem::new(&g, &s, 2.0);
        let mut lines = 0;
        let lin = fixed_point_solve(&p, &SolverOptions::default(), &mut |_| lines += 1).unwrap();
        assert!(lin.report.converged);
        assert_eq!(lines, lin.report.iterations());
        assert!(lin.report.min_sonic_margin() > 0.0);
        assert!(lin.report.pde_residual <= lin.report.tol_pde);
        let picard = fixed_point_solve(
            &p,
            &SolverOptions { scheme: IterationScheme::Picard, ..Default::default() },
            &mut |_| {},
        )
        .unwrap();
        let diff = lin.u.iter().zip(&picard.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 10.0 * lin.report.tol_outer, "schemes differ by {diff:.3e}");
    }

    #[test]
    fn supersonic_background_is_reported() {
        // A fast background over a tall bump drives the crest sonic.
        let gas = GasConstants { m0: 0.7, m_star: 0.9, ..GasConstants::default() };
        let s = build_stream_limit(FarFieldState::constant(gas).unwrap(), 12.0);
        let opts = ProfileOptions::new(0.1, 2.0, 0.8, 0.4).allow_straight_corners();
        let profile = build_profile(ProfileSpec::bump(0.6, 1), &opts).unwrap();
        let g = generate_grid(&truncate(profile, 4.0, 4.0).unwrap(), 33, 33, Grading::uniform()).unwrap();
        let p = FlowProblem::new(&g, &s, 2.0);
        match fixed_point_solve(&p, &SolverOptions::default(), &mut |_| {}) {
            Err(SolverError::SubsonicViolation { nodes, .. }) => assert!(!nodes.is_empty()),
            Err(SolverError::QuadratureStateSupersonic { .. }) => {}
            other => panic!("expected a subsonic violation, got {:?}", other.map(|s| s.report)),
        }
    }
}
