//! Replays the fuzz corpus, and byte-level mutations of it, through the same
//! round-trip checks the fuzz targets make.

use std::fs;
use std::path::PathBuf;

use cqpc_core::model::validate;
use cqpc_core::textio::{
    graph_to_string, instance_to_string, parse_graph, parse_instance, parse_policy, parse_policy_with, parse_query,
    policy_to_string, query_to_string,
};
use rand::{Rng, SeedableRng};

fn seeds(target: &str) -> Vec<String> {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fuzz", "corpus", target].iter().collect();
    let mut out: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// The seed itself plus deterministic truncations, deletions, duplications and
/// byte substitutions.
fn mutations(seed: &str) -> Vec<String> {
    const ALPHABET: &[u8] = b"(),.:!=%-{}*\n 0123xyzRSHnodeuniverse";
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed.len() as u64);
    let bytes = seed.as_bytes();
    let mut out = vec![seed.to_string()];
    for _ in 0..300 {
        let mut b = bytes.to_vec();
        if b.is_empty() {
            b.push(b'(');
        }
        let i = rng.gen_range(0..b.len());
        match rng.gen_range(0..4) {
            0 => b.truncate(i),
            1 => {
                b.remove(i);
            }
            2 => {
                let j = rng.gen_range(i..b.len());
                let chunk = b[i..=j].to_vec();
                b.splice(i..i, chunk);
            }
            _ => b[i] = ALPHABET[rng.gen_range(0..ALPHABET.len())],
        }
        if let Ok(s) = String::from_utf8(b) {
            out.push(s);
        }
    }
    out
}

#[test]
fn query_corpus() {
    let mut parsed = 0;
    for seed in seeds("parse_query") {
        assert!(parse_query(&seed).is_ok(), "seed does not parse: {seed}");
        for text in mutations(&seed) {
            if let Ok(q) = parse_query(&text) {
                parsed += 1;
                assert_eq!(parse_query(&query_to_string(&q)).unwrap(), q, "{text:?}");
                assert!(validate(&q, &q.body_schema().unwrap()).is_ok(), "{text:?}");
            }
        }
    }
    assert!(parsed > 0);
}

#[test]
fn instance_corpus() {
    for seed in seeds("parse_instance") {
        assert!(parse_instance(&seed).is_ok(), "seed does not parse: {seed}");
        for text in mutations(&seed) {
            if let Ok(i) = parse_instance(&text) {
                assert_eq!(parse_instance(&instance_to_string(&i)).unwrap(), i, "{text:?}");
            }
        }
    }
}

#[test]
fn policy_corpus() {
    for seed in seeds("parse_policy") {
        assert!(parse_policy(&seed).is_ok(), "seed does not parse: {seed}");
        for text in mutations(&seed) {
            if let Ok(p) = parse_policy(&text) {
                assert_eq!(parse_policy(&policy_to_string(&p)).unwrap(), p, "{text:?}");
                if parse_policy_with(&text, true).is_ok() {
                    assert!(!p.has_except_rules(), "{text:?}");
                }
            }
        }
    }
}

#[test]
fn graph_corpus() {
    for seed in seeds("parse_graph") {
        assert!(parse_graph(&seed).is_ok(), "seed does not parse: {seed}");
        for text in mutations(&seed) {
            if let Ok(g) = parse_graph(&text) {
                assert_eq!(parse_graph(&graph_to_string(&g)).unwrap(), g, "{text:?}");
            }
        }
    }
}
