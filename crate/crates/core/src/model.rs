//! Core domain types: data values, facts, instances, queries, valuations.
//!
//! Every type here is immutable once built and cheap to share across threads.
//! Sets are kept in `BTreeSet`s so iteration order is canonical everywhere.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A data value. The infinite domain is modeled as the non-negative integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataValue(pub u64);

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for DataValue {
    fn from(v: u64) -> Self {
        DataValue(v)
    }
}

/// A query variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("relation {relation} used with arity {found} but previously with arity {expected}")]
    ArityConflict {
        relation: String,
        expected: usize,
        found: usize,
    },
}

/// Relation names with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    relations: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a relation, failing if it is already present with another arity.
    pub fn declare(&mut self, relation: &str, arity: usize) -> Result<(), SchemaError> {
        match self.relations.get(relation) {
            Some(&expected) if expected != arity => Err(SchemaError::ArityConflict {
                relation: relation.to_string(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(relation.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn merge(&mut self, other: &Schema) -> Result<(), SchemaError> {
        for (r, &a) in &other.relations {
            self.declare(r, a)?;
        }
        Ok(())
    }

    pub fn arity(&self, relation: &str) -> Option<usize> {
        self.relations.get(relation).copied()
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.relations.contains_key(relation)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(r, &a)| (r.as_str(), a))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn remove(&mut self, relation: &str) {
        self.relations.remove(relation);
    }

    /// Schema of the facts in an instance.
    pub fn of_instance(instance: &Instance) -> Result<Schema, SchemaError> {
        let mut s = Schema::new();
        for f in instance.iter() {
            s.declare(&f.relation, f.args.len())?;
        }
        Ok(s)
    }
}

/// A ground fact `R(a1, ..., ak)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub relation: String,
    pub args: Vec<DataValue>,
}

impl Fact {
    pub fn new(relation: impl Into<String>, args: impl IntoIterator<Item = u64>) -> Self {
        Fact {
            relation: relation.into(),
            args: args.into_iter().map(DataValue).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// True when every argument is a member of `values`.
    pub fn is_over(&self, values: &BTreeSet<DataValue>) -> bool {
        self.args.iter().all(|v| values.contains(v))
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// A finite set of facts.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    facts: BTreeSet<Fact>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        self.facts.insert(fact)
    }

    pub fn remove(&mut self, fact: &Fact) -> bool {
        self.facts.remove(fact)
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    /// The active domain: every value occurring in some fact.
    pub fn adom(&self) -> BTreeSet<DataValue> {
        self.facts.iter().flat_map(|f| f.args.iter().copied()).collect()
    }

    pub fn is_subset(&self, other: &Instance) -> bool {
        self.facts.is_subset(&other.facts)
    }

    pub fn union(&self, other: &Instance) -> Instance {
        self.facts.union(&other.facts).cloned().collect()
    }

    pub fn difference(&self, other: &Instance) -> Instance {
        self.facts.difference(&other.facts).cloned().collect()
    }

    /// Facts of one relation, in canonical order.
    pub fn of_relation<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.facts.iter().filter(move |f| f.relation == relation)
    }
}

impl FromIterator<Fact> for Instance {
    fn from_iter<T: IntoIterator<Item = Fact>>(iter: T) -> Self {
        Instance {
            facts: iter.into_iter().collect(),
        }
    }
}

impl Extend<Fact> for Instance {
    fn extend<T: IntoIterator<Item = Fact>>(&mut self, iter: T) {
        self.facts.extend(iter)
    }
}

impl<'a> IntoIterator for &'a Instance {
    type Item = &'a Fact;
    type IntoIter = std::collections::btree_set::Iter<'a, Fact>;

    fn into_iter(self) -> Self::IntoIter {
        self.facts.iter()
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{fact}")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const(DataValue),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// `R(t1, ..., tk)` over variables and (in policy rules only) constants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(relation: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            relation: relation.into(),
            args,
        }
    }

    /// Atom whose arguments are all variables with the given names.
    pub fn with_vars(relation: impl Into<String>, vars: &[&str]) -> Self {
        Atom::new(relation, vars.iter().map(|v| Term::var(v)).collect())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn has_constants(&self) -> bool {
        self.args.iter().any(|t| matches!(t, Term::Const(_)))
    }

    /// Replaces every variable through `f`, keeping constants.
    pub fn map_vars(&self, mut f: impl FnMut(&Var) -> Var) -> Atom {
        Atom {
            relation: self.relation.clone(),
            args: self
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Term::Var(f(v)),
                    c => c.clone(),
                })
                .collect(),
        }
    }

    /// Grounds the atom under `assignment`. Returns `None` when a variable is unbound.
    pub fn ground(&self, assignment: &BTreeMap<Var, DataValue>) -> Option<Fact> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => assignment.get(v).copied(),
                Term::Const(c) => Some(*c),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Fact {
            relation: self.relation.clone(),
            args,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// An inequality `x != y`, stored with the smaller variable first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Inequality(pub Var, pub Var);

impl Inequality {
    pub fn new(a: Var, b: Var) -> Self {
        if a <= b {
            Inequality(a, b)
        } else {
            Inequality(b, a)
        }
    }
}

/// One conjunctive query with negated atoms and inequalities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Disjunct {
    pub head: Atom,
    pub pos: BTreeSet<Atom>,
    pub neg: BTreeSet<Atom>,
    pub ineqs: BTreeSet<Inequality>,
}

impl Disjunct {
    pub fn new(
        head: Atom,
        pos: impl IntoIterator<Item = Atom>,
        neg: impl IntoIterator<Item = Atom>,
        ineqs: impl IntoIterator<Item = (Var, Var)>,
    ) -> Self {
        Disjunct {
            head,
            pos: pos.into_iter().collect(),
            neg: neg.into_iter().collect(),
            ineqs: ineqs
                .into_iter()
                .map(|(a, b)| Inequality::new(a, b))
                .collect(),
        }
    }

    /// Every variable of the disjunct, sorted. This order defines the canonical
    /// lexicographic order of assignments.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs: BTreeSet<Var> = self.head.vars().cloned().collect();
        for a in self.pos.iter().chain(self.neg.iter()) {
            vs.extend(a.vars().cloned());
        }
        for Inequality(a, b) in &self.ineqs {
            vs.insert(a.clone());
            vs.insert(b.clone());
        }
        vs
    }

    pub fn pos_vars(&self) -> BTreeSet<Var> {
        self.pos.iter().flat_map(|a| a.vars().cloned()).collect()
    }

    /// body = pos ∪ neg
    pub fn body(&self) -> impl Iterator<Item = &Atom> {
        self.pos.iter().chain(self.neg.iter())
    }

    pub fn is_full(&self) -> bool {
        let head: BTreeSet<Var> = self.head.vars().cloned().collect();
        self.vars().is_subset(&head)
    }

    /// Satisfiable iff no atom is both required and prohibited.
    pub fn is_satisfiable(&self) -> bool {
        self.pos.is_disjoint(&self.neg)
    }

    pub fn map_vars(&self, mut f: impl FnMut(&Var) -> Var) -> Disjunct {
        Disjunct {
            head: self.head.map_vars(&mut f),
            pos: self.pos.iter().map(|a| a.map_vars(&mut f)).collect(),
            neg: self.neg.iter().map(|a| a.map_vars(&mut f)).collect(),
            ineqs: self
                .ineqs
                .iter()
                .map(|Inequality(a, b)| Inequality::new(f(a), f(b)))
                .collect(),
        }
    }

    /// Schema of the body atoms.
    pub fn body_schema(&self) -> Result<Schema, SchemaError> {
        let mut s = Schema::new();
        for a in self.body() {
            s.declare(&a.relation, a.arity())?;
        }
        Ok(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("a query needs at least one disjunct")]
    Empty,
    #[error("disjunct {index} has head {found} but disjunct 0 has head {expected}")]
    HeadMismatch {
        index: usize,
        expected: String,
        found: String,
    },
}

/// A union of conjunctive queries with negation and inequalities.
///
/// Disjuncts always have pairwise disjoint variable sets. When the given
/// disjuncts share variables, every variable `x` of disjunct `i` is renamed
/// to `x#i`; already-disjoint input is kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    disjuncts: Vec<Disjunct>,
}

impl Query {
    pub fn new(disjuncts: Vec<Disjunct>) -> Result<Query, QueryError> {
        let first = disjuncts.first().ok_or(QueryError::Empty)?;
        let (rel, ar) = (first.head.relation.clone(), first.head.arity());
        for (index, d) in disjuncts.iter().enumerate() {
            if d.head.relation != rel || d.head.arity() != ar {
                return Err(QueryError::HeadMismatch {
                    index,
                    expected: format!("{rel}/{ar}"),
                    found: format!("{}/{}", d.head.relation, d.head.arity()),
                });
            }
        }
        Ok(Query {
            disjuncts: rename_apart(disjuncts),
        })
    }

    pub fn single(d: Disjunct) -> Query {
        Query { disjuncts: vec![d] }
    }

    pub fn disjuncts(&self) -> &[Disjunct] {
        &self.disjuncts
    }

    pub fn disjunct(&self, i: usize) -> &Disjunct {
        &self.disjuncts[i]
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn head_relation(&self) -> &str {
        &self.disjuncts[0].head.relation
    }

    pub fn head_arity(&self) -> usize {
        self.disjuncts[0].head.arity()
    }

    pub fn varmax(&self) -> usize {
        self.disjuncts.iter().map(|d| d.vars().len()).max().unwrap_or(0)
    }

    pub fn is_full(&self) -> bool {
        self.disjuncts.iter().all(Disjunct::is_full)
    }

    pub fn has_negation(&self) -> bool {
        self.disjuncts.iter().any(|d| !d.neg.is_empty())
    }

    pub fn has_inequalities(&self) -> bool {
        self.disjuncts.iter().any(|d| !d.ineqs.is_empty())
    }

    /// Relations occurring in disjunct bodies.
    pub fn body_schema(&self) -> Result<Schema, SchemaError> {
        let mut s = Schema::new();
        for d in &self.disjuncts {
            s.merge(&d.body_schema()?)?;
        }
        Ok(s)
    }

    pub fn uses_relation(&self, relation: &str) -> bool {
        self.disjuncts.iter().any(|d| {
            d.head.relation == relation || d.body().any(|a| a.relation == relation)
        })
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.disjuncts.iter().flat_map(|d| d.vars()).collect()
    }
}

fn rename_apart(disjuncts: Vec<Disjunct>) -> Vec<Disjunct> {
    let mut seen = BTreeSet::new();
    let mut clash = false;
    for d in &disjuncts {
        for v in d.vars() {
            if !seen.insert(v) {
                clash = true;
            }
        }
    }
    if !clash {
        return disjuncts;
    }
    disjuncts
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.map_vars(|v| Var(format!("{}#{i}", v.0))))
        .collect()
}

/// A total assignment of the variables of one disjunct.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation {
    pub disjunct: usize,
    pub assignment: BTreeMap<Var, DataValue>,
}

impl Valuation {
    pub fn new(disjunct: usize, assignment: BTreeMap<Var, DataValue>) -> Self {
        Valuation {
            disjunct,
            assignment,
        }
    }

    pub fn from_pairs<'a>(disjunct: usize, pairs: impl IntoIterator<Item = (&'a str, u64)>) -> Self {
        Valuation {
            disjunct,
            assignment: pairs
                .into_iter()
                .map(|(v, x)| (Var::new(v), DataValue(x)))
                .collect(),
        }
    }

    pub fn get(&self, v: &Var) -> Option<DataValue> {
        self.assignment.get(v).copied()
    }

    pub fn apply(&self, atom: &Atom) -> Fact {
        atom.ground(&self.assignment)
            .expect("valuation is total on its disjunct")
    }

    pub fn head(&self, q: &Query) -> Fact {
        self.apply(&q.disjunct(self.disjunct).head)
    }

    /// V(pos): facts required by the valuation.
    pub fn required(&self, q: &Query) -> Instance {
        q.disjunct(self.disjunct).pos.iter().map(|a| self.apply(a)).collect()
    }

    /// V(neg): facts prohibited by the valuation.
    pub fn prohibited(&self, q: &Query) -> Instance {
        q.disjunct(self.disjunct).neg.iter().map(|a| self.apply(a)).collect()
    }

    /// V(body) = V(pos) ∪ V(neg).
    pub fn body(&self, q: &Query) -> Instance {
        q.disjunct(self.disjunct).body().map(|a| self.apply(a)).collect()
    }

    /// V(pos) ∩ V(neg) = ∅ and every inequality separates its two values.
    pub fn is_consistent(&self, q: &Query) -> bool {
        let d = q.disjunct(self.disjunct);
        let ineq_ok = d
            .ineqs
            .iter()
            .all(|Inequality(a, b)| self.get(a) != self.get(b));
        ineq_ok && self.required(q).facts().is_disjoint(self.prohibited(q).facts())
    }

    pub fn range(&self) -> BTreeSet<DataValue> {
        self.assignment.values().copied().collect()
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {{", self.disjunct)?;
        for (i, (v, x)) in self.assignment.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{x}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("mapping is not injective: {0} has two preimages")]
pub struct PermutationError(pub DataValue);

/// A bijection on a finite set of values, identity elsewhere.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Permutation {
    mapping: BTreeMap<DataValue, DataValue>,
}

impl Permutation {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Builds a permutation from explicit pairs. The image set must equal the
    /// domain set so the map is a bijection of that finite set.
    pub fn new(pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self, PermutationError> {
        let mapping: BTreeMap<DataValue, DataValue> = pairs
            .into_iter()
            .map(|(a, b)| (DataValue(a), DataValue(b)))
            .collect();
        let mut images = BTreeSet::new();
        for &b in mapping.values() {
            if !images.insert(b) {
                return Err(PermutationError(b));
            }
        }
        let domain: BTreeSet<DataValue> = mapping.keys().copied().collect();
        if let Some(&stray) = images.difference(&domain).next() {
            return Err(PermutationError(stray));
        }
        Ok(Permutation { mapping })
    }

    pub fn swap(a: u64, b: u64) -> Self {
        Permutation::new([(a, b), (b, a)]).expect("a swap is a bijection")
    }

    pub fn apply_value(&self, v: DataValue) -> DataValue {
        self.mapping.get(&v).copied().unwrap_or(v)
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            mapping: self.mapping.iter().map(|(&a, &b)| (b, a)).collect(),
        }
    }
}

/// Things whose data values can be renamed by a permutation.
pub trait Permute {
    fn permute(&self, p: &Permutation) -> Self;
}

impl Permute for Fact {
    fn permute(&self, p: &Permutation) -> Self {
        Fact {
            relation: self.relation.clone(),
            args: self.args.iter().map(|&v| p.apply_value(v)).collect(),
        }
    }
}

impl Permute for Instance {
    fn permute(&self, p: &Permutation) -> Self {
        self.iter().map(|f| f.permute(p)).collect()
    }
}

impl Permute for Valuation {
    fn permute(&self, p: &Permutation) -> Self {
        Valuation {
            disjunct: self.disjunct,
            assignment: self
                .assignment
                .iter()
                .map(|(v, &x)| (v.clone(), p.apply_value(x)))
                .collect(),
        }
    }
}

pub fn apply_permutation<T: Permute>(x: &T, p: &Permutation) -> T {
    x.permute(p)
}

/// A broken query invariant, located at a disjunct when applicable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub disjunct: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    UnsafeHeadVar(Var),
    UnsafeNegatedVar(Var),
    UnsafeInequalityVar(Var),
    TrivialInequality(Var),
    HeadRelationInBody(String),
    ConstantInQueryAtom(String),
    UnknownRelation(String),
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    HeadMismatch,
    SharedVariable(Var),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.disjunct {
            write!(f, "disjunct {i}: ")?;
        }
        match &self.kind {
            ViolationKind::UnsafeHeadVar(v) => {
                write!(f, "head variable {v} does not occur in a positive atom")
            }
            ViolationKind::UnsafeNegatedVar(v) => {
                write!(f, "negated variable {v} does not occur in a positive atom")
            }
            ViolationKind::UnsafeInequalityVar(v) => {
                write!(f, "inequality variable {v} does not occur in a positive atom")
            }
            ViolationKind::TrivialInequality(v) => {
                write!(f, "inequality variables not distinct ({v} != {v})")
            }
            ViolationKind::HeadRelationInBody(r) => {
                write!(f, "head relation {r} occurs in the body")
            }
            ViolationKind::ConstantInQueryAtom(a) => {
                write!(f, "query atom {a} contains a constant")
            }
            ViolationKind::UnknownRelation(r) => write!(f, "relation {r} is not in the schema"),
            ViolationKind::ArityMismatch {
                relation,
                expected,
                found,
            } => write!(
                f,
                "relation {relation} has arity {expected} in the schema but is used with {found}"
            ),
            ViolationKind::HeadMismatch => f.write_str("head relation differs from disjunct 0"),
            ViolationKind::SharedVariable(v) => {
                write!(f, "variable {v} is shared with another disjunct")
            }
        }
    }
}

/// Checks the query invariants against a body schema. Returns every violation.
pub fn validate(q: &Query, schema: &Schema) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut seen_vars: BTreeMap<Var, usize> = BTreeMap::new();
    let head_rel = q.head_relation();
    let head_ar = q.head_arity();
    for (i, d) in q.disjuncts().iter().enumerate() {
        let mut push = |kind| {
            out.push(Violation {
                disjunct: Some(i),
                kind,
            })
        };
        if d.head.relation != head_rel || d.head.arity() != head_ar {
            push(ViolationKind::HeadMismatch);
        }
        let pos_vars = d.pos_vars();
        for v in d.head.vars() {
            if !pos_vars.contains(v) {
                push(ViolationKind::UnsafeHeadVar(v.clone()));
            }
        }
        for a in &d.neg {
            for v in a.vars() {
                if !pos_vars.contains(v) {
                    push(ViolationKind::UnsafeNegatedVar(v.clone()));
                }
            }
        }
        for Inequality(a, b) in &d.ineqs {
            if a == b {
                push(ViolationKind::TrivialInequality(a.clone()));
            }
            for v in [a, b] {
                if !pos_vars.contains(v) {
                    push(ViolationKind::UnsafeInequalityVar(v.clone()));
                }
            }
        }
        for a in std::iter::once(&d.head).chain(d.body()) {
            if a.has_constants() {
                push(ViolationKind::ConstantInQueryAtom(a.to_string()));
            }
        }
        for a in d.body() {
            if a.relation == d.head.relation {
                push(ViolationKind::HeadRelationInBody(a.relation.clone()));
            }
            match schema.arity(&a.relation) {
                None => push(ViolationKind::UnknownRelation(a.relation.clone())),
                Some(expected) if expected != a.arity() => push(ViolationKind::ArityMismatch {
                    relation: a.relation.clone(),
                    expected,
                    found: a.arity(),
                }),
                _ => {}
            }
        }
        for v in d.vars() {
            if let Some(&other) = seen_vars.get(&v) {
                if other != i {
                    push(ViolationKind::SharedVariable(v.clone()));
                }
            } else {
                seen_vars.insert(v, i);
            }
        }
    }
    out.dedup();
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
