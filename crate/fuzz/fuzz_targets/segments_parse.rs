//! Segment parser: no panics on arbitrary text; accepted parses tile
//! their frame range and round-trip through the writer.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(segments) = attrflow::io::parse_segments(text) {
        let total = segments.last().map_or(0, |s| s.end_frame);
        attrflow::synthdata::validate_segments(&segments, total).expect("tiling invariant");
        let rendered = attrflow::io::render_segments(&segments);
        let again = attrflow::io::parse_segments(&rendered).expect("round trip");
        assert_eq!(segments, again);
    }
});
