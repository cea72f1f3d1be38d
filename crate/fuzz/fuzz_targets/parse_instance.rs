#![no_main]

use cqpc_core::textio::{instance_to_string, parse_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(i) = parse_instance(text) {
        assert_eq!(parse_instance(&instance_to_string(&i)).unwrap(), i);
    }
});
