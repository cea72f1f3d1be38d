//! Generators that turn containment instances into parallel-correctness
//! instances and into simpler containment instances, plus the 3-colorability
//! encoding for full queries.
//!
//! Relation names introduced here are reserved: `Global`, `Type`, `StartC`,
//! `StartS`, `Stop`, `Active`, and the primed copy `R'` of every input relation
//! `R`. Inputs that already use one of them are rejected.
//!
//! `StartC` is the start marker held by the completeness nodes `c_i`, `StartS`
//! the one held by the soundness nodes `s_i` (all `StartS` facts).

mod coloring;

use std::collections::BTreeSet;

use thiserror::Error;

pub use coloring::{brute_3colorable, gen_3col, Graph, BRUTE_FORCE_MAX_VERTICES};

use crate::decide::ParallelMode;
use crate::model::{Atom, DataValue, Disjunct, Fact, Query, QueryError, Schema, SchemaError, Term, Var};
use crate::policy::{DistributionPolicy, NodeId, PolicyError, Rule};

pub const GLOBAL: &str = "Global";
pub const TYPE: &str = "Type";
pub const START_C: &str = "StartC";
pub const START_S: &str = "StartS";
pub const STOP: &str = "Stop";
pub const ACTIVE: &str = "Active";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("relation {0} is reserved by this construction but occurs in the input")]
    ReservedRelation(String),
    #[error("{side} query is unsatisfiable (an atom is both required and negated)")]
    Unsatisfiable { side: &'static str },
    #[error("{side} query must be Boolean (nullary head)")]
    NotBoolean { side: &'static str },
    #[error("{side} query must have exactly one disjunct")]
    NotSingleDisjunct { side: &'static str },
    #[error("{side} query must be free of inequalities")]
    HasInequalities { side: &'static str },
    #[error("every disjunct of the {side} query needs a positive atom")]
    EmptyPositiveBody { side: &'static str },
    #[error("queries have different heads: {lhs} vs {rhs}")]
    HeadMismatch { lhs: String, rhs: String },
    #[error("label count {m} is below the largest variable count {needed}")]
    LabelCountTooSmall { m: usize, needed: usize },
    #[error("the graph has no edges")]
    EmptyGraph,
    #[error("graph has {n} vertices; at most {max} are supported")]
    TooManyVertices { n: usize, max: usize },
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// A generated query, an optional second query, and an optional policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionOutput {
    pub query: Query,
    pub query2: Option<Query>,
    pub policy: Option<DistributionPolicy>,
    /// Names the construction and its parameters.
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

fn global_atom() -> Atom {
    Atom::new(GLOBAL, Vec::new())
}

fn check_heads(q1: &Query, q2: &Query) -> Result<(), ReductionError> {
    if q1.head_relation() != q2.head_relation() || q1.head_arity() != q2.head_arity() {
        return Err(ReductionError::HeadMismatch {
            lhs: format!("{}/{}", q1.head_relation(), q1.head_arity()),
            rhs: format!("{}/{}", q2.head_relation(), q2.head_arity()),
        });
    }
    Ok(())
}

fn reject_reserved(qs: &[&Query], names: &[&str]) -> Result<(), ReductionError> {
    for name in names {
        if qs.iter().any(|q| q.uses_relation(name)) {
            return Err(ReductionError::ReservedRelation(name.to_string()));
        }
    }
    Ok(())
}

/// Adds `Global()` to the positive (or negative) body of every disjunct.
pub fn add_global_literal(q: &Query, sign: Sign) -> Result<Query, ReductionError> {
    reject_reserved(&[q], &[GLOBAL])?;
    let disjuncts = q
        .disjuncts()
        .iter()
        .map(|d| {
            let mut d = d.clone();
            match sign {
                Sign::Positive => d.pos.insert(global_atom()),
                Sign::Negative => d.neg.insert(global_atom()),
            };
            d
        })
        .collect();
    Ok(Query::new(disjuncts)?)
}

fn union(a: &Query, b: &Query) -> Result<Query, ReductionError> {
    let mut ds = a.disjuncts().to_vec();
    ds.extend(b.disjuncts().iter().cloned());
    Ok(Query::new(ds)?)
}

/// Builds `(Q*, P)` with `q ⊆ q2` iff `Q*` has property `mode` under `P`.
///
/// `Q*` is `q¬Global ∪ q2Global` for soundness, `qGlobal ∪ q2¬Global` for
/// completeness and `q¬Global ∪ q2` for correctness. `P` has universe
/// `{0, …, varmax(q)−1}`; node `k1` is responsible for every fact except
/// `Global()` and node `k2` for `Global()` only. With `strict` set, `k1` gets
/// one all-variable rule per body relation instead of an `*except` rule.
pub fn reduce_containment_to_parallel(
    q: &Query,
    q2: &Query,
    mode: ParallelMode,
    strict: bool,
) -> Result<ReductionOutput, ReductionError> {
    check_heads(q, q2)?;
    reject_reserved(&[q, q2], &[GLOBAL])?;
    for (side, query) in [("lhs", q), ("rhs", q2)] {
        if query.disjuncts().iter().any(|d| d.pos.is_empty()) {
            return Err(ReductionError::EmptyPositiveBody { side });
        }
    }
    let star = match mode {
        ParallelMode::Sound => union(
            &add_global_literal(q, Sign::Negative)?,
            &add_global_literal(q2, Sign::Positive)?,
        )?,
        ParallelMode::Complete => union(
            &add_global_literal(q, Sign::Positive)?,
            &add_global_literal(q2, Sign::Negative)?,
        )?,
        ParallelMode::Correct => union(&add_global_literal(q, Sign::Negative)?, q2)?,
    };
    let universe = (0..q.varmax() as u64).map(DataValue);
    let k1 = NodeId::new("k1");
    let k2 = NodeId::new("k2");
    let mut rules = vec![(k2, Rule::Pattern(global_atom()))];
    if strict {
        let mut schema = q.body_schema()?;
        schema.merge(&q2.body_schema()?)?;
        for (rel, arity) in schema.iter() {
            rules.push((k1.clone(), Rule::Pattern(variable_atom(rel, arity))));
        }
        if schema.is_empty() {
            return Err(PolicyError::EmptyNetwork.into());
        }
    } else {
        let excluded: BTreeSet<Fact> = [Fact::new(GLOBAL, [])].into_iter().collect();
        rules.push((k1, Rule::Except(excluded)));
    }
    let policy = DistributionPolicy::new(universe, rules)?;
    Ok(ReductionOutput {
        query: star,
        query2: None,
        policy: Some(policy),
        note: format!("global-literal reduction, mode {mode}"),
    })
}

fn variable_atom(rel: &str, arity: usize) -> Atom {
    Atom::new(rel, (0..arity).map(|k| Term::Var(Var(format!("v{k}")))).collect())
}

fn primed(rel: &str) -> String {
    format!("{rel}'")
}

/// `α(w, a)`: relation `R` becomes `R'` with `w` as new first argument.
fn alpha(w: &Var, a: &Atom) -> Atom {
    let mut args = vec![Term::Var(w.clone())];
    args.extend(a.args.iter().cloned());
    Atom::new(primed(&a.relation), args)
}

/// A variable named `base`, or `base` with primes appended, not in `used`.
fn fresh(base: &str, used: &mut BTreeSet<Var>) -> Var {
    let mut v = Var::new(base);
    while used.contains(&v) {
        v = Var(format!("{}'", v.0));
    }
    used.insert(v.clone());
    v
}

/// Renames every variable of `d` that occurs in `used` to a fresh one, and
/// records the new variables in `used`.
fn rename_away(d: &Disjunct, used: &mut BTreeSet<Var>) -> Disjunct {
    let own = d.vars();
    let clashing: Vec<Var> = own.iter().filter(|v| used.contains(v)).cloned().collect();
    used.extend(own);
    let mut map = std::collections::BTreeMap::new();
    for v in clashing {
        let n = fresh(&v.0, used);
        map.insert(v, n);
    }
    d.map_vars(|v| map.get(v).cloned().unwrap_or_else(|| v.clone()))
}

fn input_schema(qs: &[&Query]) -> Result<Schema, ReductionError> {
    let mut s = Schema::new();
    for q in qs {
        s.merge(&q.body_schema()?)?;
    }
    Ok(s)
}

/// Rejects inputs where a primed copy `R'` would collide with an existing
/// relation name.
fn reject_primed_collisions(qs: &[&Query], schema: &Schema) -> Result<(), ReductionError> {
    for (rel, _) in schema.iter() {
        let p = primed(rel);
        if schema.contains(&p) || qs.iter().any(|q| q.head_relation() == p) {
            return Err(ReductionError::ReservedRelation(p));
        }
    }
    Ok(())
}

fn boolean_cq<'a>(q: &'a Query, side: &'static str) -> Result<&'a Disjunct, ReductionError> {
    if q.len() != 1 {
        return Err(ReductionError::NotSingleDisjunct { side });
    }
    if q.head_arity() != 0 {
        return Err(ReductionError::NotBoolean { side });
    }
    if q.has_inequalities() {
        return Err(ReductionError::HasInequalities { side });
    }
    let d = q.disjunct(0);
    if !d.is_satisfiable() {
        return Err(ReductionError::Unsatisfiable { side });
    }
    Ok(d)
}

/// [`reduce_containment_to_parallel_general_with`] at
/// `m = max(varmax(q1), varmax(q2), 2)`.
///
/// At least two labels are used: with a single label `ℓ1 = ℓ2` is forced and
/// node `c_1` sees every fact relevant to the query, so the verdict no longer
/// tracks containment (for example `H() :- R(x).` against
/// `H() :- R(x), !S(x).`).
pub fn reduce_containment_to_parallel_general(q1: &Query, q2: &Query) -> Result<ReductionOutput, ReductionError> {
    let m = q1.varmax().max(q2.varmax()).max(2);
    reduce_containment_to_parallel_general_with(q1, q2, m)
}

/// Combines Boolean CQ¬s `q1` and `q2` into one Boolean query `Q` over primed
/// relations plus `Type`, `StartC`, `StartS`, `Stop`, with a policy over
/// `{1, …, m}` on nodes `c_1..c_m`, `s_1..s_m`, `r`. For `m` at least two,
/// `q1 ⊆ q2` iff `Q` is parallel-sound, iff parallel-complete, iff
/// parallel-correct under that policy.
pub fn reduce_containment_to_parallel_general_with(
    q1: &Query,
    q2: &Query,
    m: usize,
) -> Result<ReductionOutput, ReductionError> {
    check_heads(q1, q2)?;
    let d1 = boolean_cq(q1, "lhs")?;
    let d2 = boolean_cq(q2, "rhs")?;
    let needed = q1.varmax().max(q2.varmax()).max(1);
    if m < needed {
        return Err(ReductionError::LabelCountTooSmall { m, needed });
    }
    reject_reserved(&[q1, q2], &[TYPE, START_C, START_S, STOP])?;
    let schema = input_schema(&[q1, q2])?;
    reject_primed_collisions(&[q1, q2], &schema)?;

    let mut used = d1.vars();
    let d2 = rename_away(d2, &mut used);
    let l1 = fresh("l1", &mut used);
    let l2 = fresh("l2", &mut used);
    let t = fresh("t", &mut used);
    let unary = |rel: &str, v: &Var| Atom::new(rel, vec![Term::Var(v.clone())]);

    let mut pos: Vec<Atom> = d1.pos.iter().map(|a| alpha(&l1, a)).collect();
    pos.extend(d2.pos.iter().map(|a| alpha(&l2, a)));
    pos.extend([
        unary(TYPE, &t),
        unary(START_C, &l1),
        unary(START_S, &l1),
        unary(START_S, &l2),
    ]);
    let mut neg: Vec<Atom> = d1.neg.iter().map(|a| alpha(&l1, a)).collect();
    neg.extend(d2.neg.iter().map(|a| alpha(&l2, a)));
    neg.extend([unary(STOP, &l1), unary(STOP, &l2)]);
    let query = Query::single(Disjunct::new(d1.head.clone(), pos, neg, []));

    let konst = |rel: &str, i: u64| Rule::Pattern(Atom::new(rel, vec![Term::Const(DataValue(i))]));
    let primed_rules: Vec<Rule> = schema
        .iter()
        .map(|(rel, arity)| Rule::Pattern(variable_atom(&primed(rel), arity + 1)))
        .collect();
    let mut rules = Vec::new();
    let mut nodes = Vec::new();
    for i in 1..=m as u64 {
        let c = NodeId(format!("c{i}"));
        for r in [konst(TYPE, 1), konst(START_C, i), konst(START_S, i), konst(STOP, i)] {
            rules.push((c.clone(), r));
        }
        rules.extend(primed_rules.iter().map(|r| (c.clone(), r.clone())));
        nodes.push(c);

        let s = NodeId(format!("s{i}"));
        if m >= 2 {
            rules.push((s.clone(), konst(TYPE, 2)));
        }
        rules.push((s.clone(), konst(START_C, i)));
        rules.push((s.clone(), konst(STOP, i)));
        rules.push((s.clone(), Rule::Pattern(variable_atom(START_S, 1))));
        rules.extend(primed_rules.iter().map(|r| (s.clone(), r.clone())));
        nodes.push(s);
    }
    let r = NodeId::new("r");
    for k in 3..=m as u64 {
        rules.push((r.clone(), konst(TYPE, k)));
    }
    nodes.push(r);
    let policy = DistributionPolicy::with_network((1..=m as u64).map(DataValue), nodes, rules)?;
    Ok(ReductionOutput {
        query,
        query2: None,
        policy: Some(policy),
        note: format!("labelled combination reduction, m = {m}"),
    })
}

/// Turns Boolean `q1 ⊆ q2`, with `q2` a union of `m` CQ¬s, into an equivalent
/// containment of two Boolean CQ¬s over primed relations and `Active/(m+2)`.
///
/// Each primed atom carries a label as first argument. `q1'` fixes two labels
/// `w0 ≠ w1`, holds a `w1`-copy of `q1` and `w0`-copies of every disjunct of
/// `q2`, and requires the `m` one-hot `Active` facts. `q2'` picks one `Active`
/// fact and evaluates disjunct `i` under label `z_i`.
pub fn reduce_ucq_to_cq_containment(q1: &Query, q2: &Query) -> Result<(Query, Query), ReductionError> {
    check_heads(q1, q2)?;
    let d1 = boolean_cq(q1, "lhs")?;
    if q2.head_arity() != 0 {
        return Err(ReductionError::NotBoolean { side: "rhs" });
    }
    if q2.has_inequalities() {
        return Err(ReductionError::HasInequalities { side: "rhs" });
    }
    if q2.disjuncts().iter().any(|d| !d.is_satisfiable()) {
        return Err(ReductionError::Unsatisfiable { side: "rhs" });
    }
    reject_reserved(&[q1, q2], &[ACTIVE])?;
    let schema = input_schema(&[q1, q2])?;
    reject_primed_collisions(&[q1, q2], &schema)?;

    let mut used = d1.vars();
    let rhs: Vec<Disjunct> = q2.disjuncts().iter().map(|d| rename_away(d, &mut used)).collect();
    let m = rhs.len();
    let w0 = fresh("w0", &mut used);
    let w1 = fresh("w1", &mut used);
    let zs: Vec<Var> = (1..=m).map(|i| fresh(&format!("z{i}"), &mut used)).collect();
    let active = |a: &Var, b: &Var, rest: Vec<Var>| {
        let mut args = vec![Term::Var(a.clone()), Term::Var(b.clone())];
        args.extend(rest.into_iter().map(Term::Var));
        Atom::new(ACTIVE, args)
    };
    let one_hot = |i: usize| -> Vec<Var> {
        (0..m).map(|k| if k == i { w1.clone() } else { w0.clone() }).collect()
    };

    let mut pos: Vec<Atom> = (0..m).map(|i| active(&w0, &w1, one_hot(i))).collect();
    pos.extend(d1.pos.iter().map(|a| alpha(&w1, a)));
    let mut neg = vec![active(&w1, &w0, one_hot(0))];
    neg.extend(d1.neg.iter().map(|a| alpha(&w1, a)));
    for d in &rhs {
        pos.extend(d.pos.iter().map(|a| alpha(&w0, a)));
        neg.extend(d.neg.iter().map(|a| alpha(&w0, a)));
    }
    let lhs = Query::single(Disjunct::new(d1.head.clone(), pos, neg, []));

    let mut pos = vec![active(&w0, &w1, zs.clone())];
    let mut neg = Vec::new();
    for (d, z) in rhs.iter().zip(&zs) {
        pos.extend(d.pos.iter().map(|a| alpha(z, a)));
        neg.extend(d.neg.iter().map(|a| alpha(z, a)));
    }
    let rhs = Query::single(Disjunct::new(d1.head.clone(), pos, neg, []));
    Ok((lhs, rhs))
}
