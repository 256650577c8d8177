//! Loss-curve parser: no panics on arbitrary text; round trip exact.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(losses) = attrflow::io::parse_loss_curve(text) {
        assert!(losses.iter().all(|l| l.is_finite()));
        let rendered = attrflow::io::render_loss_curve(&losses);
        let again = attrflow::io::parse_loss_curve(&rendered).expect("round trip");
        assert_eq!(losses, again);
    }
});
