//! Orchestration of the run modes and their artifacts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::analysis::{
    apply_operator, barrier_check, decay_fit, discrete_weighted_norm, dyadic_radii, euler_residuals, inflow_seeds,
    observed_order, stagnation_corners, streamline_conservation, truncation_study, vorticity_check, AnalysisError,
    BarrierSpec, DiagnosticsReport, Exclusion, WeightedNormSpec,
};
use crate::config::{ConfigError, Mode, RunConfig};
use crate::farfield::{
    build_stream_limit, check_farfield_norm, entropy_bernoulli_ratios, FarFieldError, StreamLimitData,
};
use crate::geometry::{generate_grid, truncate, BoundaryProfile, Corner, CurvilinearGrid, GeometryError};
use crate::io::{render_table, write_artifact, FieldTable, WriteError};
use crate::solver::{
    assemble_linearized, fixed_point_solve, recover_euler_fields, run_mms, Discretization, EulerFields, FlowProblem,
    FlowSolution, IterationRecord, IterationScheme, SolverError,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Values below this are treated as rounding noise in refinement ratios.
const ROUNDING_FLOOR: f64 = 1e-12;
/// Minimum coarse/fine reduction for refinement checks.
const REFINEMENT_FACTOR: f64 = 1.7;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("far field: {0}")]
    FarField(#[from] FarFieldError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("diagnostics: {0}")]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Write(#[from] WriteError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Geometry(_) | RunError::FarField(_) => EXIT_CONFIG,
            RunError::Solver(_) | RunError::Analysis(_) | RunError::Write(_) => EXIT_SOLVER,
        }
    }
}

/// Report and artifact list of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: DiagnosticsReport,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.all_pass() {
            EXIT_PASS
        } else {
            EXIT_VERDICT
        }
    }
}

/// Grid and far-field data for one truncated domain.
#[derive(Debug, Clone)]
pub struct Case {
    pub r: f64,
    pub h: f64,
    pub profile: BoundaryProfile,
    pub grid: CurvilinearGrid,
    pub stream: StreamLimitData,
    pub d0: f64,
}

impl Case {
    pub fn new(cfg: &RunConfig, r: f64, h: f64, nx: usize, nz: usize) -> Result<Self, RunError> {
        let profile = cfg.build_profile()?;
        let domain = truncate(profile.clone(), r, h)?;
        let grid = generate_grid(&domain, nx, nz, cfg.grading())?;
        let stream = build_stream_limit(cfg.far_field()?, h + 1.0);
        Ok(Self { r, h, profile, grid, stream, d0: cfg.geometry.d0 })
    }

    pub fn problem(&self) -> FlowProblem<'_> {
        FlowProblem::new(&self.grid, &self.stream, self.d0)
    }

    pub fn label(&self) -> String {
        format!("{}x{}", self.grid.nx, self.grid.nz)
    }
}

#[derive(Debug, Clone)]
pub struct SolvedCase {
    pub case: Case,
    pub solution: FlowSolution,
    pub fields: EulerFields,
}

pub fn solve_case(
    cfg: &RunConfig,
    case: Case,
    progress: &mut dyn FnMut(&str, &IterationRecord),
) -> Result<SolvedCase, RunError> {
    let label = case.label();
    let t = Instant::now();
    let solution = fixed_point_solve(&case.problem(), &cfg.solver, &mut |r| progress(&label, r))?;
    log::info!("{label}: converged in {} iterations ({:.2?})", solution.report.iterations(), t.elapsed());
    for w in &solution.report.warnings {
        log::warn!("{label}: {w}");
    }
    let fields = recover_euler_fields(&case.grid, &case.stream, &solution.psi)?;
    Ok(SolvedCase { case, solution, fields })
}

/// Node counts of the grid with twice the spacing.
pub fn coarse_counts(nx: usize, nz: usize) -> (usize, usize) {
    ((nx - 1) / 2 + 1, (nz - 1) / 2 + 1)
}

/// Runs the configured mode, writing artifacts into `out`.
pub fn run(
    cfg: &RunConfig,
    out: &Path,
    progress: &mut dyn FnMut(&str, &IterationRecord),
) -> Result<RunOutcome, RunError> {
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(ConfigError::ConstraintViolation(violations).into());
    }
    std::fs::create_dir_all(out).map_err(|source| WriteError { path: out.to_path_buf(), source })?;
    let mut artifacts = Vec::new();
    let config_text = toml::to_string(cfg).expect("configuration serializes");
    write_artifact(out, "config.toml", &config_text, &mut artifacts)?;
    let report = match cfg.mode {
        Mode::Solve => {
            let solved = solve_case(
                cfg,
                Case::new(cfg, cfg.truncation.r, cfg.truncation.h, cfg.grid.nx, cfg.grid.nz)?,
                progress,
            )?;
            write_solution(out, &solved, &mut artifacts)?;
            let mut report = DiagnosticsReport::new();
            solve_checks(&mut report, "solve", &solved);
            report
        }
        Mode::Verify => verify(cfg, out, &mut artifacts, progress)?,
        Mode::TruncationStudy => truncation(cfg, out, &mut artifacts)?,
        Mode::Mms => mms(cfg, out, &mut artifacts)?,
    };
    write_artifact(out, "report.txt", &report.render(), &mut artifacts)?;
    let manifest: String =
        artifacts.iter().map(|p| format!("{}\n", p.file_name().and_then(|n| n.to_str()).unwrap_or_default())).collect();
    write_artifact(out, "manifest.txt", &manifest, &mut artifacts)?;
    Ok(RunOutcome { report, artifacts })
}

fn write_solution(out: &Path, solved: &SolvedCase, artifacts: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let nodes = &solved.case.grid.nodes;
    let f = &solved.fields;
    let tables: [(&str, &[f64]); 7] = [
        ("psi", &solved.solution.psi),
        ("psi_minus_l", &solved.solution.u),
        ("m1", &f.m1),
        ("m2", &f.m2),
        ("rho", &f.rho),
        ("p", &f.p),
        ("mach", &f.mach),
    ];
    for (name, values) in tables {
        write_artifact(out, &format!("field_{name}.csv"), &FieldTable::new(name, nodes, values).render(), artifacts)?;
    }
    let rows: Vec<Vec<String>> = solved
        .solution
        .report
        .records
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                format!("{:.6e}", r.update),
                format!("{:.6e}", r.fixed_point_residual),
                format!("{:.6e}", r.relaxation),
                format!("{:.6e}", r.min_sonic_margin),
                format!("{:.6e}", r.linear_residual),
            ]
        })
        .collect();
    let header = ["iteration", "update", "fixed_point_residual", "relaxation", "min_sonic_margin", "linear_residual"];
    write_artifact(out, "iterations.tsv", &render_table(&header, &rows), artifacts)?;
    Ok(())
}

/// Convergence checks of one solve.
pub fn solve_checks(report: &mut DiagnosticsReport, prefix: &str, solved: &SolvedCase) {
    let r = &solved.solution.report;
    report.check(&format!("{prefix}.converged"), r.converged);
    report.info(&format!("{prefix}.iterations"), r.iterations() as f64);
    report.check_le(&format!("{prefix}.pde_residual"), r.pde_residual, r.tol_pde);
    // Ratios of update norms while they are still above the rounding level.
    let meaningful: Vec<f64> = r.records.iter().map(|x| x.update).filter(|&u| u > 1e-3 * r.tol_outer).collect();
    if meaningful.len() >= 2 {
        let worst = meaningful.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        report.check_lt(&format!("{prefix}.max_contraction_ratio"), worst, 1.0);
    }
    report.check_gt(&format!("{prefix}.min_sonic_margin"), solved.fields.min_sonic_margin(), 0.0);
    report.info(&format!("{prefix}.max_mach"), solved.fields.max_mach());
    report.info(&format!("{prefix}.max_abs_psi_minus_l"), solved.solution.u.iter().fold(0.0, |m, v| m.max(v.abs())));
}

/// Passes when `fine` is below `coarse / REFINEMENT_FACTOR`, or both are at
/// rounding level.
fn refinement_check(report: &mut DiagnosticsReport, key: &str, coarse: f64, fine: f64) {
    report.info(&format!("{key}.coarse"), coarse);
    report.info(&format!("{key}.fine"), fine);
    if coarse.max(fine) <= ROUNDING_FLOOR {
        report.check_le(&format!("{key}.rounding"), coarse.max(fine), ROUNDING_FLOOR);
    } else {
        report.check_ge(&format!("{key}.reduction"), coarse / fine, REFINEMENT_FACTOR);
    }
}

fn verify(
    cfg: &RunConfig,
    out: &Path,
    artifacts: &mut Vec<PathBuf>,
    progress: &mut dyn FnMut(&str, &IterationRecord),
) -> Result<DiagnosticsReport, RunError> {
    let (r, h) = (cfg.truncation.r, cfg.truncation.h);
    let (cx, cz) = coarse_counts(cfg.grid.nx, cfg.grid.nz);
    let fine = solve_case(cfg, Case::new(cfg, r, h, cfg.grid.nx, cfg.grid.nz)?, progress)?;
    let coarse = solve_case(cfg, Case::new(cfg, r, h, cx, cz)?, progress)?;
    write_solution(out, &fine, artifacts)?;

    let mut report = DiagnosticsReport::new();
    let alpha = cfg.weights.alpha;
    let beta = cfg.weights.beta;
    let case = &fine.case;
    let grid = &case.grid;
    let stream = &case.stream;

    // Inputs.
    let far_norm = check_farfield_norm(&stream.far, alpha);
    report.check_le("farfield.perturbation_norm", far_norm.value, far_norm.threshold);
    let (ra, rb) = entropy_bernoulli_ratios(stream, alpha);
    report.info("farfield.entropy_norm_ratio", ra);
    report.info("farfield.bernoulli_norm_ratio", rb);
    report.info("geometry.tail_norm_minus", case.profile.tail_norms[0]);
    report.info("geometry.tail_norm_plus", case.profile.tail_norms[1]);
    boundary_checks(&mut report, case);

    solve_checks(&mut report, "solve", &fine);
    solve_checks(&mut report, "solve_coarse", &coarse);

    // Divergence-form cross-check on the fine grid.
    let mut div_opts = cfg.solver;
    div_opts.discretization = Discretization::Divergence;
    match fixed_point_solve(&case.problem(), &div_opts, &mut |_| {}) {
        Ok(div) => {
            let d = div.psi.iter().zip(&fine.solution.psi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            report.info("solve.divergence_form_difference", d);
        }
        Err(e) => log::warn!("divergence-form cross-check failed: {e}"),
    }

    // Euler residuals.
    let rf = euler_residuals(grid, &fine.fields, &Exclusion::corners(grid))?;
    let rc = euler_residuals(&coarse.case.grid, &coarse.fields, &Exclusion::corners(&coarse.case.grid))?;
    for ((name, f), (_, c)) in rf.all().into_iter().zip(rc.all()) {
        report.info(&format!("euler.{name}.linf"), f.max);
        report.info(&format!("euler.{name}.l2"), f.rms);
        if f.rms.max(c.rms) <= ROUNDING_FLOOR {
            report.check_le(&format!("euler.{name}.l2_rounding"), f.rms.max(c.rms), ROUNDING_FLOOR);
        } else {
            report.check_ge(&format!("euler.{name}.l2_order"), observed_order(c.rms, f.rms, 2.0), 1.0);
            report.info(&format!("euler.{name}.linf_order"), observed_order(c.max, f.max, 2.0));
        }
    }

    // Streamline invariants.
    let top = 4.0f64.min(0.5 * h);
    let sf = streamline_conservation(
        grid,
        &fine.solution.psi,
        &fine.fields,
        stream.gamma(),
        &inflow_seeds(grid, 10, [0.3, top]),
    )?;
    let cg = &coarse.case.grid;
    let sc = streamline_conservation(
        cg,
        &coarse.solution.psi,
        &coarse.fields,
        stream.gamma(),
        &inflow_seeds(cg, 10, [0.3, top]),
    )?;
    refinement_check(&mut report, "streamline.entropy_variation", sc.max_entropy_variation, sf.max_entropy_variation);
    refinement_check(
        &mut report,
        "streamline.bernoulli_variation",
        sc.max_bernoulli_variation,
        sf.max_bernoulli_variation,
    );
    report.info("streamline.psi_variation", sf.max_psi_variation);

    // Vorticity: vanishes in the refinement limit only for a uniform far field.
    let vf = vorticity_check(grid, &fine.fields, &Exclusion::corners(grid))?;
    let vc = vorticity_check(cg, &coarse.fields, &Exclusion::corners(cg))?;
    if stream.is_uniform() {
        refinement_check(&mut report, "vorticity.max", vc.max_abs, vf.max_abs);
    } else {
        report.info("vorticity.max.coarse", vc.max_abs);
        report.info("vorticity.max.fine", vf.max_abs);
        report.check_ge("vorticity.persistence", vf.max_abs / vc.max_abs, 0.1);
    }
    let far_region = |g: &CurvilinearGrid| Exclusion { centers: stagnation_corners(g), radius: 4.0 };
    report.info("vorticity.far_region.coarse", vorticity_check(cg, &coarse.fields, &far_region(cg))?.max_abs);
    report.info("vorticity.far_region.fine", vorticity_check(grid, &fine.fields, &far_region(grid))?.max_abs);

    // Barrier inequalities with the linearized operator at the solution.
    let problem = case.problem();
    let bg = problem.background()?;
    let (lp, _) = assemble_linearized(
        &problem,
        &bg,
        &fine.solution.u,
        IterationScheme::Linearized,
        cfg.solver.quadrature_points,
    )?;
    let global = BarrierSpec::global(alpha, beta);
    let origin = apply_operator(&global.jet([0.0, 0.0]), [1.0, 0.0, 1.0], [0.0, 0.0], 0.0);
    report.info("barrier.laplacian_origin", origin);
    report.check_le("barrier.laplacian_origin_error", (origin - (beta * beta - alpha)).abs(), 1e-10);
    let bc = barrier_check(grid, &lp, &global)?;
    report.check_lt("barrier.global.max_lv", bc.max_lv, 0.0);
    report.info("barrier.global.max_lv_over_v", bc.max_relative);
    for (name, corner) in [("minus", Corner::Minus), ("plus", Corner::Plus)] {
        if (case.profile.angle(corner) - PI).abs() <= 1e-9 {
            continue;
        }
        let c = barrier_check(grid, &lp, &BarrierSpec::corner(alpha, beta, &case.profile, corner))?;
        report.info(&format!("barrier.corner_{name}.max_lv"), c.max_lv);
        let u = barrier_check(grid, &lp, &BarrierSpec::uniqueness(alpha, beta, case.profile.corner(corner)))?;
        report.info(&format!("barrier.uniqueness_{name}.max_lv"), u.max_lv);
    }

    // Decay towards infinity and the weighted-norm statistic.
    let rays = [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0, 5.0 * PI / 6.0];
    let fit = decay_fit(grid, &fine.solution.u, beta, &dyadic_radii(r.min(h)), &rays)?;
    for (k, (radius, s)) in fit.radii.iter().zip(&fit.sup_weighted).enumerate() {
        report.info(&format!("decay.sup_weighted.{k}"), *s);
        log::debug!("decay radius {radius}: {s:.3e}");
    }
    report.check("decay.nonincreasing", fit.nonincreasing(0.05));
    for (k, (_, slope)) in fit.ray_slopes.iter().enumerate() {
        if let Some(s) = slope {
            report.info(&format!("decay.ray_slope.{k}"), *s);
        }
    }
    let mut spec = WeightedNormSpec::new(2, alpha, beta)
        .with_corners(-1.0 - alpha, vec![case.profile.corner_minus, case.profile.corner_plus]);
    spec.seed = cfg.seed;
    report.info("norm.sigma_statistic", discrete_weighted_norm(grid, &fine.solution.u, &spec)?.total());
    Ok(report)
}

/// `ψ = l + g = 0` on the lower boundary and `g = 0` above `D0 + 1`.
fn boundary_checks(report: &mut DiagnosticsReport, case: &Case) {
    let data = crate::solver::DirichletData::new(case.d0, &case.stream);
    let n = 1000;
    let mut trace = 0.0f64;
    let mut above = 0.0f64;
    for k in 0..n {
        let x1 = -case.r + 2.0 * case.r * k as f64 / (n - 1) as f64;
        let f = case.profile.height(x1);
        trace = trace.max((case.stream.l(f) + data.g([x1, f], f)).abs());
        let x2 = case.d0 + 1.0 + (case.h - case.d0 - 1.0) * (k as f64 + 0.5) / n as f64;
        above = above.max(data.g([x1, x2], f).abs());
    }
    report.check_le("boundary.trace_max", trace, 1e-12);
    report.check_le("boundary.cutoff_max_above", above, 0.0);
}

fn truncation(cfg: &RunConfig, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<DiagnosticsReport, RunError> {
    let dx = 2.0 * cfg.truncation.r / (cfg.grid.nx - 1) as f64;
    let dz = cfg.truncation.h / (cfg.grid.nz - 1) as f64;
    let mut cases = Vec::new();
    for &r in &cfg.truncation.study_radii {
        let (fx, fz) = (2.0 * r / dx, r / dz);
        if (fx - fx.round()).abs() > 1e-9
            || (fz - fz.round()).abs() > 1e-9
            || !(fx.round() as usize).is_multiple_of(2)
            || !(fz.round() as usize).is_multiple_of(2)
        {
            return Err(ConfigError::ConstraintViolation(vec![format!(
                "study radius {r} is not compatible with the base spacing ({dx}, {dz}); node counts must come out odd"
            )])
            .into());
        }
        cases.push(Case::new(cfg, r, r, fx.round() as usize + 1, fz.round() as usize + 1)?);
    }
    let study = truncation_study(&cfg.truncation.study_radii, |r| {
        let case = cases.iter().find(|c| c.r == r).expect("case for every radius");
        let t = Instant::now();
        let sol = fixed_point_solve(&case.problem(), &cfg.solver, &mut |_| {})?;
        log::info!("R = {r} ({}): {} iterations, {:.2?}", case.label(), sol.report.iterations(), t.elapsed());
        Ok((case.grid.clone(), sol.psi))
    })?;
    let rows: Vec<Vec<String>> = study
        .differences
        .iter()
        .map(|d| vec![format!("{}", d.r_small), format!("{}", d.r_large), format!("{:.6e}", d.max_diff)])
        .collect();
    write_artifact(out, "truncation.tsv", &render_table(&["r_small", "r_large", "max_diff"], &rows), artifacts)?;
    let mut report = DiagnosticsReport::new();
    report.info("truncation.window", study.window);
    for (k, d) in study.differences.iter().enumerate() {
        report.info(&format!("truncation.difference.{k}"), d.max_diff);
    }
    report.check("truncation.decreasing", study.passes());
    if let Some(e) = study.fitted_exponent() {
        report.info("truncation.fitted_exponent", e);
    }
    Ok(report)
}

fn mms(cfg: &RunConfig, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<DiagnosticsReport, RunError> {
    let grids = cfg
        .grid
        .mms_sizes
        .iter()
        .map(|&n| Case::new(cfg, cfg.truncation.r, cfg.truncation.h, n, n).map(|c| c.grid))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = run_mms(&grids, &cfg.solver.linear)?;
    let rows: Vec<Vec<String>> = rep
        .levels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let order = if k == 0 { "-".to_string() } else { format!("{:.6}", rep.orders[k - 1]) };
            vec![l.nx.to_string(), l.nz.to_string(), format!("{:.6e}", l.max_error), order]
        })
        .collect();
    write_artifact(out, "mms.tsv", &render_table(&["nx", "nz", "max_error", "order"], &rows), artifacts)?;
    let mut report = DiagnosticsReport::new();
    for (k, l) in rep.levels.iter().enumerate() {
        report.info(&format!("mms.max_error.{k}"), l.max_error);
    }
    for (k, o) in rep.orders.iter().enumerate() {
        report.check_ge(&format!("mms.order.{k}.low"), *o, 1.8);
        report.check_le(&format!("mms.order.{k}.high"), *o, 2.2);
    }
    Ok(report)
}
