#![no_main]

use libfuzzer_sys::fuzz_target;
use subflow::analysis::DiagnosticsReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = DiagnosticsReport::parse(text) {
        // A rendered report is a fixed point of parse/render.
        let once = report.render();
        let again = DiagnosticsReport::parse(&once).expect("rendered report parses");
        assert_eq!(again.render(), once);
    }
});
