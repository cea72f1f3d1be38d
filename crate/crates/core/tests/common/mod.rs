//! Random generators and brute-force oracles shared by the integration tests.
//!
//! The oracles work straight from the definitions and share no code with
//! the deciders apart from policy responsibility.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cqpc_core::decide::{verify_containment, verify_parallel, DecisionReport, ParallelMode};
use cqpc_core::model::{Atom, DataValue, Disjunct, Fact, Instance, Query, Schema, Term, Var};
use cqpc_core::policy::{all_facts, responsible, DistributionPolicy, NodeId, Rule};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn values(n: u64) -> BTreeSet<DataValue> {
    (0..n).map(DataValue).collect()
}

/// Shape of randomly generated queries.
#[derive(Clone, Debug)]
pub struct QueryShape {
    pub relations: Vec<(&'static str, usize)>,
    pub max_vars: usize,
    pub max_disjuncts: usize,
    pub max_pos: usize,
    pub max_neg: usize,
    pub max_ineqs: usize,
    pub head_arity: usize,
    pub full: bool,
}

impl QueryShape {
    pub fn positive(max_vars: usize, max_disjuncts: usize) -> Self {
        QueryShape {
            relations: vec![("R", 2), ("S", 1)],
            max_vars,
            max_disjuncts,
            max_pos: 3,
            max_neg: 0,
            max_ineqs: 0,
            head_arity: 2,
            full: false,
        }
    }

    pub fn with_negation(mut self, max_neg: usize) -> Self {
        self.max_neg = max_neg;
        self
    }

    pub fn with_ineqs(mut self, max_ineqs: usize) -> Self {
        self.max_ineqs = max_ineqs;
        self
    }

    pub fn full(mut self) -> Self {
        self.full = true;
        self
    }

    pub fn head(mut self, arity: usize) -> Self {
        self.head_arity = arity;
        self
    }

    pub fn relations(mut self, relations: Vec<(&'static str, usize)>) -> Self {
        self.relations = relations;
        self
    }

    pub fn schema(&self) -> Schema {
        let mut s = Schema::new();
        for (r, a) in &self.relations {
            s.declare(r, *a).unwrap();
        }
        s
    }
}

fn var(i: usize) -> Var {
    Var(format!("v{i}"))
}

fn random_atom(rng: &mut StdRng, relations: &[(&'static str, usize)], vars: &[Var]) -> Atom {
    let (rel, arity) = *relations.choose(rng).unwrap();
    Atom::new(rel, (0..arity).map(|_| Term::Var(vars.choose(rng).unwrap().clone())).collect())
}

pub fn random_disjunct(rng: &mut StdRng, shape: &QueryShape) -> Disjunct {
    let mut k = rng.gen_range(1..=shape.max_vars);
    if shape.full {
        assert!(shape.head_arity > 0, "full random queries need a head variable");
        k = k.min(shape.head_arity);
    }
    let vars: Vec<Var> = (0..k).map(var).collect();
    let mut pos: BTreeSet<Atom> = (0..rng.gen_range(1..=shape.max_pos))
        .map(|_| random_atom(rng, &shape.relations, &vars))
        .collect();
    let unary: Vec<(&'static str, usize)> = shape.relations.iter().copied().filter(|(_, a)| *a > 0).collect();
    for v in &vars {
        if !pos.iter().any(|a| a.vars().any(|x| x == v)) {
            let mut a = random_atom(rng, &unary, &vars);
            let at = rng.gen_range(0..a.arity());
            a.args[at] = Term::Var(v.clone());
            pos.insert(a);
        }
    }
    let neg: Vec<Atom> = (0..rng.gen_range(0..=shape.max_neg))
        .map(|_| random_atom(rng, &shape.relations, &vars))
        .collect();
    let mut ineqs = Vec::new();
    if k >= 2 {
        for _ in 0..rng.gen_range(0..=shape.max_ineqs) {
            let a = rng.gen_range(0..k);
            let mut b = rng.gen_range(0..k - 1);
            if b >= a {
                b += 1;
            }
            ineqs.push((var(a), var(b)));
        }
    }
    let head_args: Vec<Term> = if shape.full {
        let mut slots: Vec<usize> = (0..shape.head_arity).collect();
        slots.shuffle(rng);
        let mut args: Vec<Option<Var>> = vec![None; shape.head_arity];
        for (v, &s) in vars.iter().zip(&slots) {
            args[s] = Some(v.clone());
        }
        args.into_iter()
            .map(|a| Term::Var(a.unwrap_or_else(|| vars.choose(rng).unwrap().clone())))
            .collect()
    } else {
        (0..shape.head_arity).map(|_| Term::Var(vars.choose(rng).unwrap().clone())).collect()
    };
    Disjunct::new(Atom::new("H", head_args), pos, neg, ineqs)
}

pub fn random_query(rng: &mut StdRng, shape: &QueryShape) -> Query {
    let n = rng.gen_range(1..=shape.max_disjuncts);
    Query::new((0..n).map(|_| random_disjunct(rng, shape)).collect()).unwrap()
}

/// A disjunct that contains `d` as a query: some negated atoms and
/// inequalities dropped, variables renamed, occasionally one more negated
/// atom (which may break containment).
pub fn weaken(rng: &mut StdRng, d: &Disjunct, shape: &QueryShape) -> Disjunct {
    let mut w = d.clone();
    w.neg.retain(|_| rng.gen_bool(0.6));
    w.ineqs.retain(|_| rng.gen_bool(0.6));
    if shape.max_neg > 0 && rng.gen_bool(0.3) {
        let vars: Vec<Var> = w.pos_vars().into_iter().collect();
        w.neg.insert(random_atom(rng, &shape.relations, &vars));
    }
    if !shape.full && rng.gen_bool(0.5) && w.pos.len() > 1 {
        let victim = w.pos.iter().nth(rng.gen_range(0..w.pos.len())).unwrap().clone();
        let mut smaller = w.clone();
        smaller.pos.remove(&victim);
        let keep = smaller.pos_vars();
        let safe = smaller.head.vars().all(|v| keep.contains(v))
            && smaller.neg.iter().all(|a| a.vars().all(|v| keep.contains(v)))
            && smaller.ineqs.iter().all(|i| keep.contains(&i.0) && keep.contains(&i.1));
        if safe {
            w = smaller;
        }
    }
    let names: Vec<Var> = w.vars().into_iter().collect();
    let mut targets: Vec<usize> = (0..names.len()).collect();
    targets.shuffle(rng);
    let map: BTreeMap<Var, Var> = names
        .iter()
        .zip(targets)
        .map(|(v, t)| (v.clone(), Var(format!("u{t}"))))
        .collect();
    w.map_vars(|v| map[v].clone())
}

/// A pair of queries likely to be related by containment either way.
pub fn related_pair(rng: &mut StdRng, lhs: &QueryShape, rhs: &QueryShape) -> (Query, Query) {
    let q1 = random_query(rng, lhs);
    let n = rng.gen_range(1..=rhs.max_disjuncts);
    let mut ds = Vec::new();
    for _ in 0..n {
        if rng.gen_bool(0.5) {
            let src = q1.disjunct(rng.gen_range(0..q1.len()));
            ds.push(weaken(rng, src, rhs));
        } else {
            ds.push(random_disjunct(rng, rhs));
        }
    }
    if rng.gen_bool(0.2) {
        return (Query::new(ds).unwrap(), q1);
    }
    (q1, Query::new(ds).unwrap())
}

pub fn random_policy(
    rng: &mut StdRng,
    relations: &[(&'static str, usize)],
    universe: u64,
    max_nodes: usize,
    allow_except: bool,
) -> DistributionPolicy {
    let u = values(universe);
    let uv: Vec<DataValue> = u.iter().copied().collect();
    let mut rules = Vec::new();
    for n in 0..rng.gen_range(1..=max_nodes) {
        let node = NodeId(format!("n{n}"));
        for _ in 0..rng.gen_range(1..=3) {
            if allow_except && rng.gen_bool(0.1) {
                let schema: Schema = {
                    let mut s = Schema::new();
                    for (r, a) in relations {
                        s.declare(r, *a).unwrap();
                    }
                    s
                };
                let facts = all_facts(&schema, &u);
                let excluded: BTreeSet<Fact> =
                    (0..rng.gen_range(0..=2)).filter_map(|_| facts.choose(rng).cloned()).collect();
                rules.push((node.clone(), Rule::Except(excluded)));
                continue;
            }
            let (rel, arity) = *relations.choose(rng).unwrap();
            let args = (0..arity)
                .map(|_| {
                    if uv.is_empty() || rng.gen_bool(0.5) {
                        Term::Var(Var::new(*["x", "y"].choose(rng).unwrap()))
                    } else {
                        Term::Const(*uv.choose(rng).unwrap())
                    }
                })
                .collect();
            rules.push((node.clone(), Rule::Pattern(Atom::new(rel, args))));
        }
    }
    DistributionPolicy::new(u, rules).unwrap()
}

pub fn random_instance(rng: &mut StdRng, schema: &Schema, vals: &BTreeSet<DataValue>, density: f64) -> Instance {
    all_facts(schema, vals).into_iter().filter(|_| rng.gen_bool(density)).collect()
}

/// Every subset of `facts`, as instances. Only for small fact sets.
pub fn all_subsets(facts: &[Fact]) -> impl Iterator<Item = Instance> + '_ {
    assert!(facts.len() <= 20, "too many facts to enumerate");
    (0u64..1 << facts.len()).map(move |mask| {
        facts
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, f)| f.clone())
            .collect()
    })
}

fn ground(a: &Atom, m: &BTreeMap<Var, DataValue>) -> Fact {
    Fact {
        relation: a.relation.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => m[v],
                Term::Const(c) => *c,
            })
            .collect(),
    }
}

/// Q(I) by trying every assignment of every disjunct over adom(I).
pub fn naive_eval(q: &Query, i: &Instance) -> Instance {
    let adom: Vec<DataValue> = i.adom().into_iter().collect();
    let mut out = Instance::new();
    for d in q.disjuncts() {
        let vars: Vec<Var> = d.vars().into_iter().collect();
        if !vars.is_empty() && adom.is_empty() {
            continue;
        }
        let mut digits = vec![0usize; vars.len()];
        loop {
            let m: BTreeMap<Var, DataValue> =
                vars.iter().cloned().zip(digits.iter().map(|&k| adom[k])).collect();
            let ok = d.pos.iter().all(|a| i.contains(&ground(a, &m)))
                && d.neg.iter().all(|a| !i.contains(&ground(a, &m)))
                && d.ineqs.iter().all(|e| m[&e.0] != m[&e.1]);
            if ok {
                out.insert(ground(&d.head, &m));
            }
            let mut k = 0;
            loop {
                if k == digits.len() {
                    break;
                }
                digits[k] += 1;
                if digits[k] < adom.len() {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                break;
            }
        }
    }
    out
}

/// [Q,P](I) from the definition.
pub fn naive_one_round(q: &Query, p: &DistributionPolicy, i: &Instance) -> Instance {
    let mut out = Instance::new();
    for n in p.network() {
        let local: Instance = i.iter().filter(|f| responsible(p, n, f)).cloned().collect();
        out.extend(naive_eval(q, &local).iter().cloned());
    }
    out
}

/// Whether `mode` holds on one instance.
pub fn mode_holds_on(q: &Query, p: &DistributionPolicy, i: &Instance, mode: ParallelMode) -> bool {
    let central = naive_eval(q, i);
    let dist = naive_one_round(q, p, i);
    match mode {
        ParallelMode::Sound => dist.is_subset(&central),
        ParallelMode::Complete => central.is_subset(&dist),
        ParallelMode::Correct => central == dist,
    }
}

/// The property over every instance of facts(σ, U), with σ the body schema.
pub fn brute_parallel(q: &Query, p: &DistributionPolicy, mode: ParallelMode) -> bool {
    let facts = all_facts(&q.body_schema().unwrap(), p.universe());
    let holds = all_subsets(&facts).all(|i| mode_holds_on(q, p, &i, mode));
    holds
}

/// q1 ⊆ q2 over every instance with values `0..k`.
pub fn brute_contained(q1: &Query, q2: &Query, k: u64) -> bool {
    let mut s = q1.body_schema().unwrap();
    s.merge(&q2.body_schema().unwrap()).unwrap();
    let facts = all_facts(&s, &values(k));
    let holds = all_subsets(&facts).all(|i| naive_eval(q1, &i).is_subset(&naive_eval(q2, &i)));
    holds
}

/// Re-checks every negative report against its witness; panics otherwise.
pub fn checked_parallel(
    r: DecisionReport,
    q: &Query,
    p: &DistributionPolicy,
    mode: ParallelMode,
) -> DecisionReport {
    if r.is_violated() {
        assert!(verify_parallel(&r, q, p, mode), "invalid witness for {mode}: {r:?}");
        let w = r.witness.as_ref().unwrap();
        assert!(!mode_holds_on(q, p, &w.instance, mode), "oracle rejects witness: {r:?}");
    }
    r
}

pub fn checked_containment(r: DecisionReport, q1: &Query, q2: &Query) -> DecisionReport {
    if r.is_violated() {
        assert!(verify_containment(&r, q1, q2), "invalid containment witness: {r:?}");
        let w = r.witness.as_ref().unwrap();
        let f = w.fact.as_ref().unwrap();
        assert!(naive_eval(q1, &w.instance).contains(f) && !naive_eval(q2, &w.instance).contains(f));
    }
    r
}
