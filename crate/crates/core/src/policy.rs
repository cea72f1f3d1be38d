//! Distribution policies and one-round distributed evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::eval::evaluate;
use crate::model::{Atom, DataValue, Fact, Instance, Query, Schema, Term, Var};

/// A network node name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        NodeId(name.into())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The responsibility pattern of one rule.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Every substitution of the variables by universe values yields a fact the
    /// node is responsible for.
    Pattern(Atom),
    /// Every fact over the universe except the listed ones.
    Except(BTreeSet<Fact>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("a policy needs at least one node")]
    EmptyNetwork,
    #[error("rule for node {node} uses constant {value} outside the universe")]
    ConstantOutsideUniverse { node: NodeId, value: DataValue },
    #[error("fact {fact} uses values outside the policy universe")]
    FactOutsideUniverse { fact: Fact },
}

/// A policy given by an enumerated universe and responsibility rules.
///
/// The network is the set of nodes that own at least one rule, plus any nodes
/// declared explicitly through [`DistributionPolicy::with_network`]. Rules are
/// kept sorted so two policies with the same rules compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributionPolicy {
    universe: BTreeSet<DataValue>,
    network: BTreeSet<NodeId>,
    rules: Vec<(NodeId, Rule)>,
}

impl DistributionPolicy {
    pub fn new(
        universe: impl IntoIterator<Item = DataValue>,
        rules: impl IntoIterator<Item = (NodeId, Rule)>,
    ) -> Result<Self, PolicyError> {
        Self::with_network(universe, [], rules)
    }

    /// Like [`DistributionPolicy::new`], but `nodes` join the network even when
    /// they own no rule.
    pub fn with_network(
        universe: impl IntoIterator<Item = DataValue>,
        nodes: impl IntoIterator<Item = NodeId>,
        rules: impl IntoIterator<Item = (NodeId, Rule)>,
    ) -> Result<Self, PolicyError> {
        let universe: BTreeSet<DataValue> = universe.into_iter().collect();
        let rules: BTreeSet<(NodeId, Rule)> = rules.into_iter().collect();
        let mut network: BTreeSet<NodeId> = nodes.into_iter().collect();
        network.extend(rules.iter().map(|(n, _)| n.clone()));
        if network.is_empty() {
            return Err(PolicyError::EmptyNetwork);
        }
        for (node, rule) in &rules {
            let values: Vec<DataValue> = match rule {
                Rule::Pattern(a) => a
                    .args
                    .iter()
                    .filter_map(|t| match t {
                        Term::Const(c) => Some(*c),
                        Term::Var(_) => None,
                    })
                    .collect(),
                Rule::Except(fs) => fs.iter().flat_map(|f| f.args.iter().copied()).collect(),
            };
            if let Some(&value) = values.iter().find(|v| !universe.contains(v)) {
                return Err(PolicyError::ConstantOutsideUniverse {
                    node: node.clone(),
                    value,
                });
            }
        }
        Ok(DistributionPolicy {
            universe,
            network,
            rules: rules.into_iter().collect(),
        })
    }

    pub fn universe(&self) -> &BTreeSet<DataValue> {
        &self.universe
    }

    pub fn network(&self) -> &BTreeSet<NodeId> {
        &self.network
    }

    pub fn rules(&self) -> &[(NodeId, Rule)] {
        &self.rules
    }

    pub fn rules_of<'a>(&'a self, node: &'a NodeId) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |(n, _)| n == node).map(|(_, r)| r)
    }

    pub fn has_except_rules(&self) -> bool {
        self.rules.iter().any(|(_, r)| matches!(r, Rule::Except(_)))
    }

    /// Schema of the relations named in pattern and except rules.
    pub fn schema(&self) -> Result<Schema, crate::model::SchemaError> {
        let mut s = Schema::new();
        for (_, r) in &self.rules {
            match r {
                Rule::Pattern(a) => s.declare(&a.relation, a.arity())?,
                Rule::Except(fs) => {
                    for f in fs {
                        s.declare(&f.relation, f.arity())?;
                    }
                }
            }
        }
        Ok(s)
    }

    /// Rewrites every except rule into plain pattern rules over `schema`:
    /// relations without excluded facts get one all-variable rule, the others get
    /// one fact rule per remaining tuple over the universe.
    pub fn expand_except(&self, schema: &Schema) -> DistributionPolicy {
        let mut rules = Vec::new();
        for (node, rule) in &self.rules {
            match rule {
                Rule::Pattern(_) => rules.push((node.clone(), rule.clone())),
                Rule::Except(excluded) => {
                    for (rel, arity) in schema.iter() {
                        if excluded.iter().any(|f| f.relation == rel) {
                            for fact in facts_over(rel, arity, &self.universe) {
                                if !excluded.contains(&fact) {
                                    rules.push((node.clone(), Rule::Pattern(ground_atom(&fact))));
                                }
                            }
                        } else {
                            let vars: Vec<Term> =
                                (0..arity).map(|k| Term::Var(Var(format!("v{k}")))).collect();
                            rules.push((node.clone(), Rule::Pattern(Atom::new(rel, vars))));
                        }
                    }
                }
            }
        }
        DistributionPolicy::with_network(self.universe.iter().copied(), self.network.iter().cloned(), rules)
            .expect("expansion keeps rules over the universe")
    }
}

fn ground_atom(f: &Fact) -> Atom {
    Atom::new(f.relation.clone(), f.args.iter().map(|&v| Term::Const(v)).collect())
}

/// All facts of one relation over a set of values, in canonical order.
pub fn facts_over(relation: &str, arity: usize, values: &BTreeSet<DataValue>) -> Vec<Fact> {
    let values: Vec<DataValue> = values.iter().copied().collect();
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for prefix in &out {
            for &v in &values {
                let mut t = prefix.clone();
                t.push(v);
                next.push(t);
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|args| Fact {
            relation: relation.to_string(),
            args,
        })
        .collect()
}

/// facts(σ, U) in canonical order.
pub fn all_facts(schema: &Schema, values: &BTreeSet<DataValue>) -> Vec<Fact> {
    schema
        .iter()
        .flat_map(|(r, a)| facts_over(r, a, values))
        .collect()
}

fn pattern_matches(atom: &Atom, fact: &Fact) -> bool {
    if atom.relation != fact.relation || atom.arity() != fact.arity() {
        return false;
    }
    let mut binding: BTreeMap<&Var, DataValue> = BTreeMap::new();
    for (t, &v) in atom.args.iter().zip(&fact.args) {
        match t {
            Term::Const(c) if *c != v => return false,
            Term::Const(_) => {}
            Term::Var(x) => {
                if let Some(&b) = binding.get(x) {
                    if b != v {
                        return false;
                    }
                } else {
                    binding.insert(x, v);
                }
            }
        }
    }
    true
}

/// Whether `node` is responsible for `fact`. Facts using values outside the
/// universe have no responsible node.
pub fn responsible(p: &DistributionPolicy, node: &NodeId, fact: &Fact) -> bool {
    if !fact.is_over(&p.universe) {
        return false;
    }
    p.rules_of(node).any(|r| match r {
        Rule::Pattern(a) => pattern_matches(a, fact),
        Rule::Except(excluded) => !excluded.contains(fact),
    })
}

/// Nodes responsible for a fact.
pub fn responsible_nodes<'a>(p: &'a DistributionPolicy, fact: &'a Fact) -> impl Iterator<Item = &'a NodeId> + 'a {
    p.network.iter().filter(move |n| responsible(p, n, fact))
}

fn check_over_universe(p: &DistributionPolicy, i: &Instance) -> Result<(), PolicyError> {
    match i.iter().find(|f| !f.is_over(&p.universe)) {
        Some(f) => Err(PolicyError::FactOutsideUniverse { fact: f.clone() }),
        None => Ok(()),
    }
}

/// The facts of `i` that `node` is responsible for.
pub fn local_instance(p: &DistributionPolicy, i: &Instance, node: &NodeId) -> Result<Instance, PolicyError> {
    check_over_universe(p, i)?;
    Ok(i.iter().filter(|f| responsible(p, node, f)).cloned().collect())
}

pub type LocalInstanceMap = BTreeMap<NodeId, Instance>;

/// Local instances of every node.
pub fn distribute(p: &DistributionPolicy, i: &Instance) -> Result<LocalInstanceMap, PolicyError> {
    check_over_universe(p, i)?;
    Ok(p
        .network
        .iter()
        .map(|n| (n.clone(), i.iter().filter(|f| responsible(p, n, f)).cloned().collect()))
        .collect())
}

/// Facts of `i` without any responsible node.
pub fn orphans(p: &DistributionPolicy, i: &Instance) -> Instance {
    i.iter()
        .filter(|f| responsible_nodes(p, f).next().is_none())
        .cloned()
        .collect()
}

/// [Q,P](I): the union of Q over all local instances.
pub fn one_round_eval(q: &Query, p: &DistributionPolicy, i: &Instance) -> Result<Instance, PolicyError> {
    let mut out = Instance::new();
    for local in distribute(p, i)?.values() {
        out.extend(evaluate(q, local).iter().cloned());
    }
    Ok(out)
}

/// Parallel-soundness, -completeness and -correctness on one instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceCheck {
    pub sound: bool,
    pub complete: bool,
    pub correct: bool,
}

pub fn check_on_instance(q: &Query, p: &DistributionPolicy, i: &Instance) -> Result<InstanceCheck, PolicyError> {
    let central = evaluate(q, i);
    let distributed = one_round_eval(q, p, i)?;
    let sound = distributed.is_subset(&central);
    let complete = central.is_subset(&distributed);
    Ok(InstanceCheck {
        sound,
        complete,
        correct: sound && complete,
    })
}
