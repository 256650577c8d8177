//! Attribute sidecar parser: no panics on arbitrary text; accepted
//! parses are finite and round-trip through the writer.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(attrs) = attrflow::io::parse_attribute_sidecar(text) {
        assert!(attrs.iter().all(|a| a.is_finite()));
        let rendered = attrflow::io::render_attribute_sidecar(&attrs);
        let again = attrflow::io::parse_attribute_sidecar(&rendered).expect("round trip");
        assert_eq!(attrs, again);
    }
});
