#![no_main]

use libfuzzer_sys::fuzz_target;
use weaktrace::circuitfile::parse_bytes;

fuzz_target!(|data: &[u8]| {
    // any input yields a document or positioned diagnostics, never a panic
    if let Err(e) = parse_bytes(data) {
        assert!(!e.diagnostics.is_empty());
        assert!(e.diagnostics.iter().all(|d| d.line >= 1 && d.column >= 1));
    }
});
