#![no_main]

use cqpc_core::model::validate;
use cqpc_core::textio::{parse_query, query_to_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything that parses must print back to the same query.
    if let Ok(q) = parse_query(text) {
        let back = parse_query(&query_to_string(&q)).expect("printed query re-parses");
        assert_eq!(back, q);
        assert!(validate(&q, &q.body_schema().unwrap()).is_ok());
    }
});
