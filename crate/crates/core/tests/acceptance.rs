//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every violated report produced here is re-checked, and criterion 9
//! reports the tally.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use common::*;
use cqpc_core::decide::{
    contains_bounded, contains_cq, contains_full_poly, contains_full_ucq, decide_parallel_monotone,
    decide_parallel_search, verify_containment, verify_parallel, DecisionReport, ParallelMode, SearchOptions,
};
use cqpc_core::eval::{evaluate, is_minimal, restrict};
use cqpc_core::model::{apply_permutation, DataValue, Instance, Permutation, Query, Valuation};
use cqpc_core::policy::{distribute, orphans, DistributionPolicy, NodeId};
use cqpc_core::reductions::{
    brute_3colorable, gen_3col, reduce_containment_to_parallel, reduce_containment_to_parallel_general, Graph,
};
use cqpc_core::textio::{parse_instance, parse_policy, parse_query};
use rand::seq::SliceRandom;
use rand::Rng;

static CHECKED: AtomicUsize = AtomicUsize::new(0);
static BAD: AtomicUsize = AtomicUsize::new(0);

fn q(text: &str) -> Query {
    parse_query(text).unwrap()
}

fn inst(text: &str) -> Instance {
    parse_instance(text).unwrap()
}

fn opts() -> SearchOptions {
    SearchOptions::default()
}

/// Re-check of a parallel-problem report through the library verifier and the
/// naive one-round oracle.
fn seen_parallel(r: DecisionReport, q: &Query, p: &DistributionPolicy, mode: ParallelMode) -> DecisionReport {
    if r.is_violated() {
        CHECKED.fetch_add(1, Ordering::Relaxed);
        let w = r.witness.as_ref().unwrap();
        if !verify_parallel(&r, q, p, mode) || mode_holds_on(q, p, &w.instance, mode) {
            BAD.fetch_add(1, Ordering::Relaxed);
        }
    }
    r
}

fn seen_containment(r: DecisionReport, q1: &Query, q2: &Query) -> DecisionReport {
    if r.is_violated() {
        CHECKED.fetch_add(1, Ordering::Relaxed);
        let w = r.witness.as_ref().unwrap();
        let ok = verify_containment(&r, q1, q2)
            && w.fact.as_ref().is_some_and(|f| {
                naive_eval(q1, &w.instance).contains(f) && !naive_eval(q2, &w.instance).contains(f)
            });
        if !ok {
            BAD.fetch_add(1, Ordering::Relaxed);
        }
    }
    r
}

fn verdict(r: &DecisionReport) -> Result<bool, String> {
    r.outcome().ok_or_else(|| format!("inconclusive: {:?}", r.verdict))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Tally of holds / violated verdicts.
#[derive(Default)]
struct Tally {
    holds: usize,
    violated: usize,
}

impl Tally {
    fn add(&mut self, v: bool) {
        if v {
            self.holds += 1;
        } else {
            self.violated += 1;
        }
    }
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} holds / {} violated", self.holds, self.violated)
    }
}

fn c1_policy_example() -> Result<String, String> {
    let p = parse_policy("universe 1..10\nnode k1: R(1,x,x)\nnode k2: R(2,x,y)").map_err(|e| e.to_string())?;
    let i = inst("R(1,7,7). R(1,7,8). R(2,9,8). R(2,9,9).");
    let local = distribute(&p, &i).map_err(|e| e.to_string())?;
    ensure(local[&NodeId::new("k1")] == inst("R(1,7,7)."), || format!("k1 = {:?}", local[&NodeId::new("k1")]))?;
    ensure(local[&NodeId::new("k2")] == inst("R(2,9,8). R(2,9,9)."), || format!("k2 = {:?}", local[&NodeId::new("k2")]))?;
    let lost = orphans(&p, &i);
    ensure(lost == inst("R(1,7,8)."), || format!("orphans = {lost:?}"))?;
    Ok("k1 1 fact, k2 2 facts, 1 orphan".into())
}

fn c2_union_example() -> Result<String, String> {
    let p = parse_policy("universe {0,1}\nnode a: R(x,x)\nnode b: R(0,1)\nnode b: R(1,0)\nnode b: S(x,y)")
        .map_err(|e| e.to_string())?;
    let union = q("H(x,x) :- R(x,x).\nH(y,z) :- R(y,z), S(y,z).");
    let q2 = q("H(y,z) :- R(y,z), S(y,z).");
    let m = decide_parallel_monotone(&union, &p).map_err(|e| e.to_string())?;
    ensure(verdict(&m)?, || "monotone decider rejects the union".into())?;
    let s = seen_parallel(decide_parallel_search(&union, &p, ParallelMode::Correct, &opts()).unwrap(), &union, &p, ParallelMode::Correct);
    ensure(verdict(&s)?, || "search rejects the union".into())?;
    let r = seen_parallel(decide_parallel_search(&q2, &p, ParallelMode::Complete, &opts()).unwrap(), &q2, &p, ParallelMode::Complete);
    ensure(!verdict(&r)?, || "q2 reported complete".into())?;
    let w = &r.witness.as_ref().unwrap().instance;
    ensure(*w == inst("R(0,0). S(0,0)."), || format!("witness {w:?}"))?;
    let m2 = seen_parallel(decide_parallel_monotone(&q2, &p).unwrap(), &q2, &p, ParallelMode::Complete);
    ensure(!verdict(&m2)?, || "monotone decider accepts q2".into())?;
    Ok("union correct by both deciders; q2 witness {R(0,0), S(0,0)}".into())
}

fn c3_minimality() -> Result<String, String> {
    let q = q("H(u,v) :- R(u,v), R(v,u), R(u,u).\nH(x,y) :- R(x,y), R(y,z), y != z.");
    let v2 = Valuation::from_pairs(1, [("x", 0), ("y", 0), ("z", 1)]);
    let w1 = Valuation::from_pairs(0, [("u", 0), ("v", 1)]);
    let v1 = Valuation::from_pairs(0, [("u", 0), ("v", 0)]);
    let got = (is_minimal(&v2, &q), is_minimal(&w1, &q), is_minimal(&v1, &q));
    ensure(got == (false, false, true), || format!("(V2, W1, V1) = {got:?}"))?;
    Ok("V2 not minimal, W1 not minimal, V1 minimal".into())
}

fn exponential_query(n: usize) -> (Query, DistributionPolicy) {
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let doms: String = xs.iter().map(|x| format!(", Dom({x},{x})")).collect();
    let text = format!("H() :- Dom(w0,w0), Dom(w1,w1){doms}, !Dom(w0,w1), !R({}).", xs.join(","));
    let zeros = vec!["0"; n].join(",");
    let pol = format!("universe {{0,1}}\nnode a: *except R({zeros})\nnode b: R({zeros})");
    (q(&text), parse_policy(&pol).unwrap())
}

fn c4_exponential() -> Result<String, String> {
    let mut sizes = Vec::new();
    for n in [2usize, 3] {
        let (q, p) = exponential_query(n);
        let r = seen_parallel(decide_parallel_search(&q, &p, ParallelMode::Sound, &opts()).unwrap(), &q, &p, ParallelMode::Sound);
        ensure(!verdict(&r)?, || format!("n={n}: reported sound"))?;
        let size = r.witness.as_ref().unwrap().instance.len();
        ensure(size == (1 << n) + 2, || format!("n={n}: witness has {size} facts"))?;
        let c = decide_parallel_search(&q, &p, ParallelMode::Complete, &opts()).unwrap();
        ensure(verdict(&c)?, || format!("n={n}: reported incomplete"))?;
        sizes.push(format!("n={n}: {size} facts"));
    }
    Ok(sizes.join(", "))
}

fn c5_monotone_vs_search() -> Result<String, String> {
    let mut r = rng(0xACCE_0005);
    let shape = QueryShape::positive(3, 2).with_ineqs(1);
    let mut tally = Tally::default();
    for case in 0..200 {
        let query = random_query(&mut r, &shape);
        let universe = r.gen_range(1..=3);
        let p = random_policy(&mut r, &shape.relations, universe, 3, false);
        let a = seen_parallel(decide_parallel_monotone(&query, &p).unwrap(), &query, &p, ParallelMode::Complete);
        let b = seen_parallel(
            decide_parallel_search(&query, &p, ParallelMode::Complete, &opts()).unwrap(),
            &query,
            &p,
            ParallelMode::Complete,
        );
        let (a, b) = (verdict(&a)?, verdict(&b)?);
        ensure(a == b, || format!("case {case}: monotone {a}, search {b} on {query}"))?;
        tally.add(a);
    }
    Ok(format!("200 cases, {tally}"))
}

fn c6_containment() -> Result<String, String> {
    let mut r = rng(0xACCE_0006);
    let full = QueryShape::positive(3, 1).with_negation(2).with_ineqs(1).full().head(3);
    let o = opts();
    let bounded = |a: &Query, b: &Query| seen_containment(contains_bounded(a, b, &o).unwrap(), a, b);
    let mut report = Vec::new();

    let mut tally = Tally::default();
    for case in 0..200 {
        let (a, b) = related_pair(&mut r, &full, &full);
        let x = verdict(&seen_containment(contains_full_poly(&a, &b).unwrap(), &a, &b))?;
        let y = verdict(&bounded(&a, &b))?;
        ensure(x == y, || format!("full_poly case {case}: {x} vs {y} on {a} / {b}"))?;
        tally.add(x);
    }
    report.push(format!("full_poly {tally}"));

    let mut tally = Tally::default();
    let lhs = QueryShape { max_disjuncts: 2, ..full.clone() };
    let rhs = QueryShape { max_disjuncts: 3, ..full.clone() };
    for case in 0..100 {
        let (a, b) = related_pair(&mut r, &lhs, &rhs);
        let x = verdict(&seen_containment(contains_full_ucq(&a, &b, &o).unwrap(), &a, &b))?;
        let y = verdict(&bounded(&a, &b))?;
        ensure(x == y, || format!("full_ucq case {case}: {x} vs {y} on {a} / {b}"))?;
        tally.add(x);
    }
    report.push(format!("full_ucq {tally}"));

    let mut tally = Tally::default();
    let cq = QueryShape::positive(3, 1).head(1);
    for case in 0..100 {
        let (a, b) = related_pair(&mut r, &cq, &cq);
        let x = verdict(&seen_containment(contains_cq(&a, &b).unwrap(), &a, &b))?;
        let y = verdict(&bounded(&a, &b))?;
        ensure(x == y, || format!("cq case {case}: {x} vs {y} on {a} / {b}"))?;
        tally.add(x);
    }
    report.push(format!("cq {tally}"));
    Ok(report.join("; "))
}

fn c7_reductions() -> Result<String, String> {
    let mut r = rng(0xACCE_0007);
    let o = opts();
    let full = QueryShape::positive(2, 1).with_negation(1).full().head(2);
    let rhs = QueryShape { max_disjuncts: 2, ..full.clone() };
    let parallel = |query: &Query, p: &DistributionPolicy, mode| {
        verdict(&seen_parallel(decide_parallel_search(query, p, mode, &o).unwrap(), query, p, mode))
    };

    let mut global = Tally::default();
    for case in 0..50 {
        let (a, b) = related_pair(&mut r, &full, &rhs);
        let expected = verdict(&seen_containment(contains_bounded(&a, &b, &o).unwrap(), &a, &b))?;
        for mode in ParallelMode::ALL {
            let out = reduce_containment_to_parallel(&a, &b, mode, false).map_err(|e| e.to_string())?;
            let got = parallel(&out.query, out.policy.as_ref().unwrap(), mode)?;
            ensure(got == expected, || format!("global case {case} {mode}: {got} vs {expected} on {a} / {b}"))?;
        }
        global.add(expected);
    }

    let mut general = Tally::default();
    let boolean = QueryShape::positive(2, 1).with_negation(1).head(0).relations(vec![("R", 1), ("S", 1)]);
    let mut case = 0;
    while case < 25 {
        let (a, b) = related_pair(&mut r, &boolean, &boolean);
        if !a.disjunct(0).is_satisfiable() || !b.disjunct(0).is_satisfiable() {
            continue;
        }
        let expected = verdict(&seen_containment(contains_bounded(&a, &b, &o).unwrap(), &a, &b))?;
        let out = reduce_containment_to_parallel_general(&a, &b).map_err(|e| e.to_string())?;
        for mode in ParallelMode::ALL {
            let got = parallel(&out.query, out.policy.as_ref().unwrap(), mode)?;
            ensure(got == expected, || format!("general case {case} {mode}: {got} vs {expected} on {a} / {b}"))?;
        }
        general.add(expected);
        case += 1;
    }
    Ok(format!("global: 50 pairs x 3 modes, {global}; general: 25 pairs x 3 modes, {general}"))
}

fn c8_three_coloring() -> Result<String, String> {
    let corpus = [
        ("K3", Graph::complete(3)),
        ("K4", Graph::complete(4)),
        ("C4", Graph::cycle(4)),
        ("C5", Graph::cycle(5)),
        ("P2", Graph::path(2)),
        ("P3", Graph::path(3)),
        ("P4", Graph::path(4)),
        ("P5", Graph::path(5)),
        ("star5", Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)])),
        ("K4+pendant", Graph::new(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4)])),
        ("loop", Graph::new(2, [(0, 0), (0, 1)])),
    ];
    let mut tally = Tally::default();
    for (name, g) in corpus {
        let (q1, q2) = gen_3col(&g).map_err(|e| e.to_string())?;
        let r = seen_containment(contains_full_ucq(&q1, &q2, &opts()).unwrap(), &q1, &q2);
        let contained = verdict(&r)?;
        let colorable = brute_3colorable(&g).map_err(|e| e.to_string())?;
        ensure(contained == !colorable, || format!("{name}: contained {contained}, colorable {colorable}"))?;
        tally.add(contained);
    }
    Ok(format!("{} graphs, {tally} (holds = not 3-colorable)", tally.holds + tally.violated))
}

fn c9_properties() -> Result<String, String> {
    let mut r = rng(0xACCE_0009);
    let shape = QueryShape::positive(3, 2).with_negation(2).with_ineqs(1);
    let schema = shape.schema();
    let mut shrunk = 0;
    for case in 0..500 {
        let query = random_query(&mut r, &shape);
        let i = random_instance(&mut r, &schema, &values(4), 0.4);
        let d: BTreeSet<DataValue> = (0..4).filter(|_| r.gen_bool(0.5)).map(DataValue).collect();
        let small = evaluate(&query, &restrict(&i, &d));
        let big = evaluate(&query, &i);
        ensure(small.is_subset(&big), || format!("restriction case {case}: {query}"))?;
        if small.len() < big.len() {
            shrunk += 1;
        }
    }
    for case in 0..200 {
        let query = random_query(&mut r, &shape);
        let i = random_instance(&mut r, &schema, &values(4), 0.4);
        let mut image: Vec<u64> = (0..4).collect();
        image.shuffle(&mut r);
        let p = Permutation::new((0..4).zip(image)).unwrap();
        ensure(
            evaluate(&query, &apply_permutation(&i, &p)) == apply_permutation(&evaluate(&query, &i), &p),
            || format!("genericity case {case}: {query}"),
        )?;
    }
    let checked = CHECKED.load(Ordering::Relaxed);
    let bad = BAD.load(Ordering::Relaxed);
    ensure(bad == 0, || format!("{bad} of {checked} witnesses failed the re-check"))?;
    Ok(format!("500 restriction ({shrunk} strict), 200 genericity, {checked} witnesses re-checked"))
}

type Criterion = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Criterion, Duration); 9] = [
        ("policy distribution example", c1_policy_example, Duration::from_secs(1)),
        ("union query correctness example", c2_union_example, Duration::from_secs(5)),
        ("minimality example", c3_minimality, Duration::from_secs(1)),
        ("exponential counterexample", c4_exponential, Duration::from_secs(300)),
        ("monotone decider vs search", c5_monotone_vs_search, Duration::from_secs(600)),
        ("containment cross-checks", c6_containment, Duration::from_secs(900)),
        ("reduction round trips", c7_reductions, Duration::from_secs(900)),
        ("3-colorability generator", c8_three_coloring, Duration::from_secs(600)),
        ("property suites and witness re-check", c9_properties, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {} {name} ({elapsed:.2?}): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({elapsed:.2?}): {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
