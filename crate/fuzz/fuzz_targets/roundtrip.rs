#![no_main]

use libfuzzer_sys::fuzz_target;
use weaktrace::circuitfile::{parse_bytes, parse_document, serialize_document};

fuzz_target!(|data: &[u8]| {
    // whatever parses must survive serialize → parse unchanged
    if let Ok(doc) = parse_bytes(data) {
        let text = serialize_document(&doc);
        let again = parse_document(&text).expect("canonical output parses");
        assert_eq!(again, doc);
        assert_eq!(serialize_document(&again), text);
    }
});
