#![no_main]

use libfuzzer_sys::fuzz_target;
use subflow::io::FieldTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = FieldTable::parse(text) {
        let again = FieldTable::parse(&table.render()).expect("rendered table parses");
        assert_eq!(again.rows.len(), table.rows.len());
    }
});
