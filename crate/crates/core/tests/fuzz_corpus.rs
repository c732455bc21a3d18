//! Replays the fuzz corpus seeds through the invariants the fuzz targets
//! assert, so the seeds stay meaningful on a stable toolchain.

use std::path::PathBuf;

use subflow::analysis::DiagnosticsReport;
use subflow::config::parse_config;
use subflow::io::FieldTable;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fuzz/corpus")).join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds_parse() {
    for (path, text) in seeds("config_parse") {
        let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let _ = cfg.violations();
    }
}

#[test]
fn report_seeds_render_to_a_fixed_point() {
    for (path, text) in seeds("report_parse") {
        let Ok(report) = DiagnosticsReport::parse(&text) else { continue };
        let once = report.render();
        assert_eq!(DiagnosticsReport::parse(&once).unwrap().render(), once, "{}", path.display());
    }
}

#[test]
fn field_table_seeds_round_trip() {
    for (path, text) in seeds("field_table_parse") {
        let table = FieldTable::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(FieldTable::parse(&table.render()).unwrap().rows.len(), table.rows.len(), "{}", path.display());
    }
}
