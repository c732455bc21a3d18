//! The flux-form and nondivergence discretizations solve the same equation,
//! so their difference must shrink at second order under refinement.

use subflow::analysis::Exclusion;
use subflow::config::RunConfig;
use subflow::run::{solve_case, Case};
use subflow::solver::Discretization;

/// (max everywhere, max away from corners, rms)
fn differences(nx: usize, nz: usize) -> (f64, f64, f64) {
    let mut cfg = RunConfig::default();
    let plain = solve_case(&cfg, Case::new(&cfg, 8.0, 8.0, nx, nz).unwrap(), &mut |_, _| {}).unwrap();
    cfg.solver.discretization = Discretization::Divergence;
    let flux = solve_case(&cfg, Case::new(&cfg, 8.0, 8.0, nx, nz).unwrap(), &mut |_, _| {}).unwrap();
    assert!(flux.solution.report.converged);
    let grid = &plain.case.grid;
    let ex = Exclusion::corners(grid);
    let (mut all, mut away, mut sq) = (0.0f64, 0.0f64, 0.0);
    for ((x, a), b) in grid.nodes.iter().zip(&plain.solution.psi).zip(&flux.solution.psi) {
        let d = (a - b).abs();
        all = all.max(d);
        if !ex.excludes(*x) {
            away = away.max(d);
        }
        sq += d * d;
    }
    (all, away, (sq / grid.nodes.len() as f64).sqrt())
}

// The kinks at the arc ends limit the global max to first order; the
// comparison away from the corner balls sees the interior truncation error.
#[test]
fn divergence_and_nondivergence_forms_agree_at_second_order() {
    let coarse = differences(33, 17);
    let fine = differences(65, 33);
    assert!(fine.0 < coarse.0, "global difference grew: {coarse:?} -> {fine:?}");
    let order = (coarse.1 / fine.1).log2();
    assert!(order >= 1.8, "order away from corners {order:.2}: {coarse:?} -> {fine:?}");
    assert!((coarse.2 / fine.2).log2() >= 1.5, "rms order: {coarse:?} -> {fine:?}");
}
