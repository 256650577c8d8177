//! Arbitrary bytes must never panic the embedding decoder; accepted
//! parses round-trip exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(embeddings) = attrflow::io::embeddings_from_bytes(data) {
        let bytes = attrflow::io::embeddings_to_bytes(&embeddings);
        let again = attrflow::io::embeddings_from_bytes(&bytes).expect("round trip");
        assert_eq!(embeddings, again);
    }
});
