//! Delta-record parser: no panics on arbitrary text; accepted records
//! are finite with non-negative deltas and round-trip exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = attrflow::io::parse_delta_records(text) {
        assert!(records.iter().all(|r| r.value >= 0.0 && r.value.is_finite()));
        assert!(records.iter().all(|r| r.manipulation.is_finite()));
        let rendered = attrflow::io::render_delta_records(&records);
        let again = attrflow::io::parse_delta_records(&rendered).expect("round trip");
        assert_eq!(records, again);
    }
});
