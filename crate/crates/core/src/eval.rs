//! Centralized evaluation: satisfaction, query results, restriction and
//! minimality of valuations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{Atom, DataValue, Disjunct, Fact, Instance, Query, Term, Valuation, Var};

/// True iff `v` is consistent for its disjunct and satisfies it on `i`.
pub fn is_satisfying(v: &Valuation, q: &Query, i: &Instance) -> bool {
    if !v.is_consistent(q) {
        return false;
    }
    let d = q.disjunct(v.disjunct);
    d.pos.iter().all(|a| i.contains(&v.apply(a))) && d.neg.iter().all(|a| !i.contains(&v.apply(a)))
}

/// Facts grouped by relation name.
pub(crate) struct FactIndex<'a> {
    by_relation: HashMap<&'a str, Vec<&'a Fact>>,
}

impl<'a> FactIndex<'a> {
    pub(crate) fn new(facts: impl IntoIterator<Item = &'a Fact>) -> Self {
        let mut by_relation: HashMap<&str, Vec<&Fact>> = HashMap::new();
        for f in facts {
            by_relation.entry(f.relation.as_str()).or_default().push(f);
        }
        FactIndex { by_relation }
    }

    fn of(&self, relation: &str) -> &[&'a Fact] {
        self.by_relation.get(relation).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Enumerates every binding that maps each atom in `atoms` onto some fact of
/// `index`. Bindings reach `emit` in the nested-loop order of `atoms`.
pub(crate) fn join(
    atoms: &[&Atom],
    index: &FactIndex<'_>,
    binding: &mut BTreeMap<Var, DataValue>,
    emit: &mut dyn FnMut(&BTreeMap<Var, DataValue>),
) {
    let Some((first, rest)) = atoms.split_first() else {
        emit(binding);
        return;
    };
    for fact in index.of(&first.relation) {
        if fact.args.len() != first.args.len() {
            continue;
        }
        let mut bound_here = Vec::new();
        let mut ok = true;
        for (t, &val) in first.args.iter().zip(&fact.args) {
            match t {
                Term::Const(c) => {
                    if *c != val {
                        ok = false;
                        break;
                    }
                }
                Term::Var(x) => match binding.get(x) {
                    Some(&b) if b != val => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding.insert(x.clone(), val);
                        bound_here.push(x.clone());
                    }
                },
            }
        }
        if ok {
            join(rest, index, binding, emit);
        }
        for x in bound_here {
            binding.remove(&x);
        }
    }
}

/// Every satisfying valuation of `q` on `i`, ordered by disjunct and then by
/// assignment.
pub fn satisfying_valuations(q: &Query, i: &Instance) -> Vec<Valuation> {
    let index = FactIndex::new(i.iter());
    let mut out = Vec::new();
    for (di, d) in q.disjuncts().iter().enumerate() {
        let atoms: Vec<&Atom> = d.pos.iter().collect();
        let mut found = BTreeSet::new();
        join(&atoms, &index, &mut BTreeMap::new(), &mut |b| {
            let v = Valuation::new(di, b.clone());
            if assignment_is_total(d, &v) && is_satisfying(&v, q, i) {
                found.insert(v);
            }
        });
        out.extend(found);
    }
    out
}

fn assignment_is_total(d: &Disjunct, v: &Valuation) -> bool {
    d.vars().iter().all(|x| v.assignment.contains_key(x))
}

/// Q(I): the head facts derived by satisfying valuations.
pub fn evaluate(q: &Query, i: &Instance) -> Instance {
    satisfying_valuations(q, i).iter().map(|v| v.head(q)).collect()
}

/// I|D: the facts of `i` whose arguments all lie in `d`.
pub fn restrict(i: &Instance, d: &BTreeSet<DataValue>) -> Instance {
    i.iter().filter(|f| f.is_over(d)).cloned().collect()
}

/// A valuation is minimal when no valuation of any disjunct derives the same head
/// fact from a strict subset of its body facts (negated atoms included).
///
/// Candidate valuations only need values from adom(V(body)): their body must map into
/// V(body), so they are found by joining every body atom against V(body).
pub fn is_minimal(v: &Valuation, q: &Query) -> bool {
    let body = v.body(q);
    let head = v.head(q);
    let index = FactIndex::new(body.iter());
    for (j, d) in q.disjuncts().iter().enumerate() {
        if d.head.relation != head.relation {
            continue;
        }
        let atoms: Vec<&Atom> = d.body().collect();
        let mut beaten = false;
        join(&atoms, &index, &mut BTreeMap::new(), &mut |b| {
            if beaten {
                return;
            }
            let w = Valuation::new(j, b.clone());
            if !assignment_is_total(d, &w) || !w.is_consistent(q) || w.head(q) != head {
                return;
            }
            let wb = w.body(q);
            if wb.len() < body.len() && wb.is_subset(&body) {
                beaten = true;
            }
        });
        if beaten {
            return false;
        }
    }
    true
}

/// Odometer over all total assignments of `vars` to `values`, lexicographic in
/// the sorted variable order.
#[derive(Clone, Debug)]
pub struct Assignments {
    vars: Vec<Var>,
    values: Vec<DataValue>,
    digits: Vec<usize>,
    done: bool,
}

impl Assignments {
    pub fn new(vars: impl IntoIterator<Item = Var>, values: impl IntoIterator<Item = DataValue>) -> Self {
        let vars: Vec<Var> = vars.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let values: Vec<DataValue> = values.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let done = values.is_empty() && !vars.is_empty();
        Assignments {
            digits: vec![0; vars.len()],
            vars,
            values,
            done,
        }
    }
}

impl Iterator for Assignments {
    type Item = BTreeMap<Var, DataValue>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self
            .vars
            .iter()
            .zip(&self.digits)
            .map(|(v, &d)| (v.clone(), self.values[d]))
            .collect();
        let mut k = self.digits.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            if self.digits[k] < self.values.len() {
                break;
            }
            self.digits[k] = 0;
        }
        Some(out)
    }
}

/// Consistent valuations of `q` over a universe, in canonical order: disjunct
/// index first, then lexicographic assignment.
pub fn valuations_over<'q>(
    q: &'q Query,
    universe: &BTreeSet<DataValue>,
) -> impl Iterator<Item = Valuation> + 'q {
    let universe: Vec<DataValue> = universe.iter().copied().collect();
    q.disjuncts().iter().enumerate().flat_map(move |(di, d)| {
        Assignments::new(d.vars(), universe.clone())
            .map(move |a| Valuation::new(di, a))
            .filter(move |v| v.is_consistent(q))
    })
}

/// Stream of the minimal valuations of a query over a universe.
pub struct ValuationStream<'q> {
    inner: Box<dyn Iterator<Item = Valuation> + 'q>,
}

impl Iterator for ValuationStream<'_> {
    type Item = Valuation;

    fn next(&mut self) -> Option<Valuation> {
        self.inner.next()
    }
}

/// Minimal valuations of a negation-free query over `universe`, in canonical order.
pub fn minimal_valuations<'q>(q: &'q Query, universe: &BTreeSet<DataValue>) -> ValuationStream<'q> {
    ValuationStream {
        inner: Box::new(valuations_over(q, universe).filter(move |v| is_minimal(v, q))),
    }
}
