#![no_main]

use cqpc_core::textio::{graph_to_string, parse_graph};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = parse_graph(text) {
        assert_eq!(parse_graph(&graph_to_string(&g)).unwrap(), g);
    }
});
