//! Run-configuration parser: arbitrary TOML text must never panic,
//! and accepted configs must pass their own validation.

#![no_main]

use attrflow_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse_str(text) {
        cfg.validate().expect("parse_str only returns validated configs");
        assert!(!cfg.manipulate.deltas.is_empty());
    }
});
