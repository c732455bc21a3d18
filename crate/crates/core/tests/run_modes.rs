use std::path::Path;

use subflow::analysis::{DiagnosticsReport, Verdict};
use subflow::config::{load_config, parse_config, Mode, RunConfig};
use subflow::io::FieldTable;
use subflow::run::{run, RunError, EXIT_CONFIG, EXIT_PASS, EXIT_SOLVER};

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn small(mode: Mode) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.mode = mode;
    cfg.grid.nx = 65;
    cfg.grid.nz = 33;
    cfg.grid.mms_sizes = vec![17, 33, 65];
    cfg
}

fn quiet() -> impl FnMut(&str, &subflow::solver::IterationRecord) {
    |_, _| {}
}

#[test]
fn solve_writes_manifest_of_nonempty_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&small(Mode::Solve), dir.path(), &mut quiet()).unwrap();
    assert_eq!(outcome.exit_code(), EXIT_PASS);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    let names: Vec<&str> = manifest.lines().collect();
    for name in ["config.toml", "report.txt", "field_psi.csv", "iterations.tsv"] {
        assert!(names.contains(&name), "{name} missing from manifest");
    }
    for name in &names {
        let meta = std::fs::metadata(dir.path().join(name)).unwrap();
        assert!(meta.len() > 0, "{name} is empty");
    }
    let psi = FieldTable::parse(&std::fs::read_to_string(dir.path().join("field_psi.csv")).unwrap()).unwrap();
    assert_eq!(psi.rows.len(), 65 * 33);
}

#[test]
fn written_config_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Mode::Solve);
    run(&cfg, dir.path(), &mut quiet()).unwrap();
    assert_eq!(load_config(&dir.path().join("config.toml")).unwrap(), cfg);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = small(Mode::Verify);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&cfg, a.path(), &mut quiet()).unwrap();
    run(&cfg, b.path(), &mut quiet()).unwrap();
    for name in ["report.txt", "config.toml", "field_psi.csv"] {
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn verify_report_round_trips_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&small(Mode::Verify), dir.path(), &mut quiet()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let parsed = DiagnosticsReport::parse(&text).unwrap();
    assert_eq!(parsed.render(), text);
    assert_eq!(parsed.failures().len(), 0);
    assert!(outcome.report.all_pass(), "failures: {:?}", outcome.report.failures());
    assert_eq!(outcome.report.get("solve.converged").unwrap().verdict, Verdict::Pass);
}

#[test]
fn mms_mode_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&small(Mode::Mms), dir.path(), &mut quiet()).unwrap();
    assert_eq!(outcome.exit_code(), EXIT_PASS, "failures: {:?}", outcome.report.failures());
    assert!(dir.path().join("mms.tsv").exists());
}

#[test]
fn supersonic_background_is_a_solver_failure() {
    let cfg = load_config(&configs().join("supersonic.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run(&cfg, dir.path(), &mut quiet()).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_SOLVER, "{err}");
}

#[test]
fn constraint_violations_are_config_failures() {
    let mut cfg = RunConfig::default();
    cfg.weights.beta = 0.9;
    let dir = tempfile::tempdir().unwrap();
    let err = run(&cfg, dir.path(), &mut quiet()).unwrap_err();
    assert!(matches!(err, RunError::Config(_)));
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert!(!dir.path().join("report.txt").exists());
}

#[test]
fn shipped_configs_parse_and_validate() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = load_config(&path).unwrap();
        assert!(cfg.violations().is_empty(), "{}: {:?}", path.display(), cfg.violations());
    }
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(parse_config("mode = \"solve\"\nbogus = 1\n").is_err());
    assert!(parse_config("[grid]\nnx = 33\nnz = 17\nextra = true\n").is_err());
}
