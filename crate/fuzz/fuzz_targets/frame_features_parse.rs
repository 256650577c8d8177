//! Frame-feature parser: no panics on arbitrary text; accepted parses
//! satisfy the type's invariants and round-trip through the writer.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(features) = attrflow::io::parse_frame_features(text) {
        assert_eq!(features.energy().len(), features.creak_probability().len());
        assert!(features.energy().iter().all(|e| *e >= 0.0 && e.is_finite()));
        assert!(features
            .creak_probability()
            .iter()
            .all(|p| (0.0..=1.0).contains(p)));
        let rendered = attrflow::io::render_frame_features(&features);
        let again = attrflow::io::parse_frame_features(&rendered).expect("round trip");
        assert_eq!(features, again);
    }
});
