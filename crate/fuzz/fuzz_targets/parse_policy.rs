#![no_main]

use cqpc_core::textio::{parse_policy, parse_policy_with, policy_to_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = parse_policy(text) {
        assert_eq!(parse_policy(&policy_to_string(&p)).unwrap(), p);
        if parse_policy_with(text, true).is_ok() {
            assert!(!p.has_except_rules());
        }
    }
});
