//! Containment deciders for q1 ⊆ q2.
//!
//! All four deciders fix counterexample domains to `{0, …, varmax(q1)−1}` and
//! enumerate q1 valuations as restricted-growth assignments over the sorted
//! variables of each disjunct, so counterexamples come out in the same
//! canonical order.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Instant;

use super::space::{restricted_growth, Bits, FactSpace};
use super::{DecideError, DecisionReport, Inconclusive, SearchOptions, Stats, Witness};
use crate::eval::{evaluate, satisfying_valuations};
use crate::model::{Atom, DataValue, Disjunct, Fact, Inequality, Instance, Query, Schema, Term, Valuation, Var};
use crate::policy::all_facts;

fn check_heads(q1: &Query, q2: &Query) -> Result<(), DecideError> {
    if q1.head_relation() != q2.head_relation() || q1.head_arity() != q2.head_arity() {
        return Err(DecideError::HeadMismatch {
            lhs: format!("{}/{}", q1.head_relation(), q1.head_arity()),
            rhs: format!("{}/{}", q2.head_relation(), q2.head_arity()),
        });
    }
    Ok(())
}

fn combined_schema(q1: &Query, q2: &Query) -> Result<Schema, DecideError> {
    let mut s = q1.body_schema()?;
    s.merge(&q2.body_schema()?)?;
    Ok(s)
}

fn finish(report: DecisionReport, start: Instant, examined: u64) -> DecisionReport {
    report.with_problem("containment").with_stats(Stats {
        candidates_examined: examined,
        elapsed_ms: start.elapsed().as_millis() as u64,
        orphans: None,
    })
}

/// Canonical valuations of disjunct `i` over `0..m` that are consistent.
fn canonical_valuations(q: &Query, i: usize, m: usize) -> impl Iterator<Item = Valuation> + '_ {
    let vars: Vec<Var> = q.disjunct(i).vars().into_iter().collect();
    restricted_growth(&vars, m.max(1))
        .into_iter()
        .map(move |a| Valuation::new(i, a))
        .filter(move |v| v.is_consistent(q))
}

/// Binds the head variables of `d` so that the head grounds to `f`.
fn match_head(d: &Disjunct, f: &Fact) -> Option<BTreeMap<Var, DataValue>> {
    if d.head.relation != f.relation || d.head.arity() != f.arity() {
        return None;
    }
    let mut b = BTreeMap::new();
    for (t, &v) in d.head.args.iter().zip(&f.args) {
        match t {
            Term::Var(x) => {
                if *b.entry(x.clone()).or_insert(v) != v {
                    return None;
                }
            }
            Term::Const(c) if *c != v => return None,
            Term::Const(_) => {}
        }
    }
    Some(b)
}

/// Exhaustive containment test for arbitrary queries.
///
/// For every canonical valuation V of a q1 disjunct, the candidates are the
/// instances J over range(V) with V(pos) ⊆ J and V(neg) ∩ J = ∅. Starting from
/// J = V(pos), any q2 valuation W deriving V(head) on J must be defeated by
/// adding one of its prohibited facts. Exploring every such choice reaches
/// every inclusion-minimal counterexample, so the reported witness is the
/// smallest one, ties broken lexicographically in fact order, for the first
/// valuation V that has a counterexample at all. Each explored J counts as one
/// examined candidate.
pub fn contains_bounded(q1: &Query, q2: &Query, opts: &SearchOptions) -> Result<DecisionReport, DecideError> {
    let start = Instant::now();
    check_heads(q1, q2)?;
    let schema = combined_schema(q1, q2)?;
    let m = q1.varmax();
    let mut examined = 0u64;
    for i in 0..q1.len() {
        for v in canonical_valuations(q1, i, m) {
            let space = FactSpace::new(&schema, &v.range());
            let mut search = DefeatSearch {
                q2,
                space: &space,
                fact: v.head(q1),
                base: space.bits_of(&v.required(q1)).expect("valuation facts lie in the domain space"),
                forbidden: space.bits_of(&v.prohibited(q1)).expect("valuation facts lie in the domain space"),
                visited: HashSet::new(),
                best: None,
                examined,
                budget: opts.budget,
            };
            let j = search.base.clone();
            let finished = search.explore(j);
            examined = search.examined;
            if !finished {
                return Ok(finish(
                    DecisionReport::inconclusive(Inconclusive::BudgetExceeded { budget: opts.budget }),
                    start,
                    examined,
                ));
            }
            if let Some((_, j)) = search.best {
                return Ok(finish(
                    DecisionReport::violated(Witness {
                        instance: space.instance_of(&j),
                        fact: Some(search.fact),
                        valuation: Some(v),
                        node: None,
                        violates: None,
                    }),
                    start,
                    examined,
                ));
            }
        }
    }
    Ok(finish(DecisionReport::holds(), start, examined))
}

/// Search for the least instance J ⊇ base avoiding `forbidden` on which no q2
/// valuation derives `fact`.
struct DefeatSearch<'a> {
    q2: &'a Query,
    space: &'a FactSpace,
    fact: Fact,
    base: Bits,
    forbidden: Bits,
    visited: HashSet<Bits>,
    /// Extra fact ids (sorted) and instance of the best counterexample so far.
    best: Option<(Vec<usize>, Bits)>,
    examined: u64,
    budget: u64,
}

impl DefeatSearch<'_> {
    /// Returns false when the budget ran out.
    fn explore(&mut self, j: Bits) -> bool {
        if !self.visited.insert(j.clone()) {
            return true;
        }
        let extra: Vec<usize> = j.ones().filter(|&k| !self.base.get(k)).collect();
        if let Some((b, _)) = &self.best {
            if extra.len() > b.len() {
                return true;
            }
        }
        if self.examined >= self.budget {
            return false;
        }
        self.examined += 1;
        let inst = self.space.instance_of(&j);
        let deriving = satisfying_valuations(self.q2, &inst)
            .into_iter()
            .find(|w| w.head(self.q2) == self.fact);
        let Some(w) = deriving else {
            let better = match &self.best {
                None => true,
                Some((b, _)) => (extra.len(), &extra) < (b.len(), b),
            };
            if better {
                self.best = Some((extra, j));
            }
            return true;
        };
        if let Some((b, _)) = &self.best {
            if extra.len() >= b.len() {
                return true;
            }
        }
        let choices: Vec<usize> = w
            .prohibited(self.q2)
            .iter()
            .filter_map(|f| self.space.id(f))
            .filter(|&k| !self.forbidden.get(k))
            .collect();
        for k in choices {
            let mut next = j.clone();
            next.set(k);
            if !self.explore(next) {
                return false;
            }
        }
        true
    }
}

fn require_single(q: &Query, side: &'static str) -> Result<(), DecideError> {
    if q.len() != 1 {
        return Err(DecideError::NotSingleDisjunct { side });
    }
    Ok(())
}

fn require_full(q: &Query, side: &'static str) -> Result<(), DecideError> {
    if !q.is_full() {
        return Err(DecideError::NotFull { side });
    }
    Ok(())
}

/// The valuation mapping the sorted variables of disjunct `i` to `0, 1, …`.
fn frozen(q: &Query, i: usize) -> Valuation {
    Valuation::new(
        i,
        q.disjunct(i)
            .vars()
            .into_iter()
            .enumerate()
            .map(|(k, v)| (v, DataValue(k as u64)))
            .collect(),
    )
}

fn extend_hom(
    atoms: &[&Atom],
    targets: &BTreeSet<Atom>,
    h: &mut BTreeMap<Var, Var>,
) -> bool {
    let Some((first, rest)) = atoms.split_first() else {
        return true;
    };
    for t in targets {
        if t.relation != first.relation || t.arity() != first.arity() {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (a, b) in first.args.iter().zip(&t.args) {
            let (Term::Var(a), Term::Var(b)) = (a, b) else {
                ok = false;
                break;
            };
            match h.get(a) {
                Some(x) if x != b => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    h.insert(a.clone(), b.clone());
                    added.push(a.clone());
                }
            }
        }
        if ok && extend_hom(rest, targets, h) {
            return true;
        }
        for a in added {
            h.remove(&a);
        }
    }
    false
}

/// Chandra–Merlin test for positive conjunctive queries: q1 ⊆ q2 iff q2 maps
/// homomorphically into the frozen body of q1, head onto head.
pub fn contains_cq(q1: &Query, q2: &Query) -> Result<DecisionReport, DecideError> {
    let start = Instant::now();
    for (q, side) in [(q1, "lhs"), (q2, "rhs")] {
        require_single(q, side)?;
        if q.has_negation() {
            return Err(DecideError::HasNegation { side });
        }
        if q.has_inequalities() {
            return Err(DecideError::HasInequalities { side });
        }
    }
    check_heads(q1, q2)?;
    let (d1, d2) = (q1.disjunct(0), q2.disjunct(0));
    let mut h = BTreeMap::new();
    let mut head_ok = true;
    for (a, b) in d2.head.args.iter().zip(&d1.head.args) {
        if let (Term::Var(a), Term::Var(b)) = (a, b) {
            if h.get(a).is_some_and(|x: &Var| x != b) {
                head_ok = false;
                break;
            }
            h.insert(a.clone(), b.clone());
        }
    }
    let atoms: Vec<&Atom> = d2.pos.iter().collect();
    if head_ok && extend_hom(&atoms, &d1.pos, &mut h) {
        return Ok(finish(DecisionReport::holds(), start, 1));
    }
    let v = frozen(q1, 0);
    let report = DecisionReport::violated(Witness {
        instance: v.required(q1),
        fact: Some(v.head(q1)),
        valuation: Some(v),
        node: None,
        violates: None,
    });
    Ok(finish(report, start, 1))
}

fn merge_pair(a: &Var, b: &Var) -> impl Fn(&Var) -> Var {
    let (a, b) = (a.clone(), b.clone());
    move |x: &Var| if *x == b { a.clone() } else { x.clone() }
}

/// q1 can give `a` and `b` the same value in some consistent valuation.
fn can_identify(d1: &Disjunct, a: &Var, b: &Var) -> bool {
    if d1.ineqs.contains(&Inequality::new(a.clone(), b.clone())) {
        return false;
    }
    let merged = d1.map_vars(merge_pair(a, b));
    merged.pos.is_disjoint(&merged.neg)
}

/// Polynomial test for full single-disjunct queries through the substitution
/// that sends the head of q2 onto the head of q1.
pub fn contains_full_poly(q1: &Query, q2: &Query) -> Result<DecisionReport, DecideError> {
    let start = Instant::now();
    for (q, side) in [(q1, "lhs"), (q2, "rhs")] {
        require_single(q, side)?;
        require_full(q, side)?;
    }
    check_heads(q1, q2)?;
    let schema = combined_schema(q1, q2)?;
    let (d1, d2) = (q1.disjunct(0), q2.disjunct(0));
    if !d1.is_satisfiable() {
        return Ok(finish(DecisionReport::holds(), start, 1));
    }
    let mut h: BTreeMap<Var, Var> = BTreeMap::new();
    let mut h_ok = true;
    for (a, b) in d2.head.args.iter().zip(&d1.head.args) {
        if let (Term::Var(a), Term::Var(b)) = (a, b) {
            if h.get(a).is_some_and(|x| x != b) {
                h_ok = false;
            }
            h.entry(a.clone()).or_insert_with(|| b.clone());
        }
    }
    let mut merges: Vec<(Var, Var)> = Vec::new();
    let holds = h_ok && {
        let img = d2.map_vars(|x| h[x].clone());
        let pos_ok = img.pos.is_subset(&d1.pos);
        let neg_ok = img.neg.is_subset(&d1.neg);
        let mut ineq_ok = true;
        for Inequality(a, b) in &d2.ineqs {
            let (ha, hb) = (&h[a], &h[b]);
            if ha == hb {
                ineq_ok = false;
            } else if can_identify(d1, ha, hb) {
                ineq_ok = false;
                merges.push((ha.clone(), hb.clone()));
            }
        }
        pos_ok && neg_ok && ineq_ok
    };
    if holds {
        return Ok(finish(DecisionReport::holds(), start, 1));
    }
    let witness = full_poly_witness(q1, q2, &schema, &merges);
    debug_assert!(witness.is_some(), "a failed substitution test always has a counterexample");
    let report = match witness {
        Some(w) => DecisionReport::violated(w),
        None => DecisionReport::holds(),
    };
    Ok(finish(report, start, 1))
}

fn full_poly_witness(q1: &Query, q2: &Query, schema: &Schema, merges: &[(Var, Var)]) -> Option<Witness> {
    let d1 = q1.disjunct(0);
    let mut candidates = vec![frozen(q1, 0)];
    for (a, b) in merges {
        let merged = d1.map_vars(merge_pair(a, b));
        let mut assignment = BTreeMap::new();
        for (k, v) in merged.vars().into_iter().enumerate() {
            assignment.insert(v, DataValue(k as u64));
        }
        let value_of_a = assignment[a];
        candidates.push(Valuation::new(
            0,
            d1.vars()
                .into_iter()
                .map(|x| {
                    let val = if x == *b { value_of_a } else { assignment[&x] };
                    (x, val)
                })
                .collect(),
        ));
    }
    for v in candidates {
        if !v.is_consistent(q1) {
            continue;
        }
        let f = v.head(q1);
        let minimal = v.required(q1);
        let maximal: Instance = all_facts(schema, &v.range())
            .into_iter()
            .filter(|g| !v.prohibited(q1).contains(g))
            .collect();
        for j in [minimal, maximal] {
            if evaluate(q1, &j).contains(&f) && !evaluate(q2, &j).contains(&f) {
                return Some(Witness {
                    instance: j,
                    fact: Some(f),
                    valuation: Some(v),
                    node: None,
                    violates: None,
                });
            }
        }
    }
    None
}

struct Determined {
    pos: BTreeSet<Fact>,
    neg: BTreeSet<Fact>,
}

/// Certificate search for full unions.
///
/// A q1 valuation V fixes the candidate fact f = V(head); since q2 is full,
/// each q2 disjunct has at most one valuation deriving f. Starting from
/// J = V(pos), the search repeatedly takes the first such valuation still
/// satisfied on J and branches on adding one of its prohibited facts. Each
/// branch adds at most one fact per q2 disjunct, so every candidate has at most
/// |pos(q1_i)| + |q2| facts.
pub fn contains_full_ucq(q1: &Query, q2: &Query, opts: &SearchOptions) -> Result<DecisionReport, DecideError> {
    let start = Instant::now();
    require_full(q1, "lhs")?;
    require_full(q2, "rhs")?;
    check_heads(q1, q2)?;
    combined_schema(q1, q2)?;
    let m = q1.varmax();
    let mut examined = 0u64;
    for i in 0..q1.len() {
        for v in canonical_valuations(q1, i, m) {
            let f = v.head(q1);
            let forbidden: BTreeSet<Fact> = v.prohibited(q1).facts().clone();
            let ws: Vec<Determined> = q2
                .disjuncts()
                .iter()
                .enumerate()
                .filter_map(|(j, d)| {
                    let w = Valuation::new(j, match_head(d, &f)?);
                    w.is_consistent(q2).then(|| Determined {
                        pos: w.required(q2).facts().clone(),
                        neg: w.prohibited(q2).facts().clone(),
                    })
                })
                .collect();
            let start_j: BTreeSet<Fact> = v.required(q1).facts().clone();
            match certificate(&start_j, &ws, &forbidden, &mut examined, opts.budget) {
                Search::Found(j) => {
                    return Ok(finish(
                        DecisionReport::violated(Witness {
                            instance: j.into_iter().collect(),
                            fact: Some(f),
                            valuation: Some(v),
                            node: None,
                            violates: None,
                        }),
                        start,
                        examined,
                    ));
                }
                Search::OutOfBudget => {
                    return Ok(finish(
                        DecisionReport::inconclusive(Inconclusive::BudgetExceeded { budget: opts.budget }),
                        start,
                        examined,
                    ));
                }
                Search::None => {}
            }
        }
    }
    Ok(finish(DecisionReport::holds(), start, examined))
}

enum Search {
    Found(BTreeSet<Fact>),
    OutOfBudget,
    None,
}

fn certificate(
    j: &BTreeSet<Fact>,
    ws: &[Determined],
    forbidden: &BTreeSet<Fact>,
    examined: &mut u64,
    budget: u64,
) -> Search {
    if *examined >= budget {
        return Search::OutOfBudget;
    }
    *examined += 1;
    let Some(w) = ws.iter().find(|w| w.pos.is_subset(j) && w.neg.is_disjoint(j)) else {
        return Search::Found(j.clone());
    };
    for g in w.neg.difference(forbidden) {
        let mut next = j.clone();
        next.insert(g.clone());
        match certificate(&next, ws, forbidden, examined, budget) {
            Search::None => {}
            other => return other,
        }
    }
    Search::None
}
