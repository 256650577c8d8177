//! Arbitrary bytes must never panic the checkpoint decoder, and any
//! accepted parse must survive an exact serialize/parse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = attrflow::io::checkpoint_from_bytes(data) {
        let bytes = attrflow::io::checkpoint_to_bytes(&params);
        let again = attrflow::io::checkpoint_from_bytes(&bytes).expect("round trip");
        assert_eq!(params, again);
    }
});
