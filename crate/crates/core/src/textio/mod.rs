//! Text formats for queries (`.cq`), instances (`.inst`), policies (`.pol`) and
//! graphs, plus the JSON rendering of decision reports.
//!
//! Query grammar, one rule per disjunct:
//!
//! ```text
//! H(x,y) :- R(x,y), !S(y), x != y.
//! ```
//!
//! Policy grammar:
//!
//! ```text
//! universe 1..10
//! node k1: R(1,x,x)
//! node k2: *except R(0,0), R(1,1)
//! ```
//!
//! Tokens may be separated by arbitrary whitespace; `%` starts a comment.

mod lexer;
mod report;

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

pub use lexer::SourceSpan;
use lexer::{Tok, Tokens};
pub use report::{report_to_json, serialize_report};

use crate::model::{
    validate, Atom, DataValue, Disjunct, Fact, Inequality, Instance, Query, QueryError, Schema, SchemaError,
    Term, Var, Violation,
};
use crate::policy::{DistributionPolicy, NodeId, PolicyError, Rule};
use crate::reductions::Graph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("{span}: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("invalid query: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("strict mode forbids `*except` rules (node {node})")]
    ExceptInStrictMode { node: String },
}

fn join_violations(vs: &[Violation]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl TextError {
    pub(crate) fn syntax(span: SourceSpan, message: impl Into<String>) -> Self {
        TextError::Syntax {
            span,
            message: message.into(),
        }
    }
}

fn parse_args<T>(
    toks: &mut Tokens,
    mut arg: impl FnMut(&mut Tokens) -> Result<T, TextError>,
) -> Result<Vec<T>, TextError> {
    toks.expect(&Tok::LParen)?;
    let mut out = Vec::new();
    if toks.eat(&Tok::RParen) {
        return Ok(out);
    }
    loop {
        out.push(arg(toks)?);
        if toks.eat(&Tok::RParen) {
            return Ok(out);
        }
        toks.expect(&Tok::Comma)?;
    }
}

fn query_atom(toks: &mut Tokens) -> Result<Atom, TextError> {
    let rel = toks.ident("a relation name")?;
    let args = parse_args(toks, |t| match t.peek() {
        Some(Tok::Number(_)) => Err(TextError::syntax(
            t.span(),
            "constants are not allowed in query atoms",
        )),
        _ => Ok(Term::Var(Var(t.ident("a variable")?))),
    })?;
    Ok(Atom::new(rel, args))
}

fn ground_fact(toks: &mut Tokens) -> Result<Fact, TextError> {
    let rel = toks.ident("a relation name")?;
    let args = parse_args(toks, |t| t.number().map(DataValue))?;
    Ok(Fact { relation: rel, args })
}

fn rule_atom(toks: &mut Tokens) -> Result<Atom, TextError> {
    let rel = toks.ident("a relation name")?;
    let args = parse_args(toks, |t| match t.peek() {
        Some(Tok::Number(_)) => Ok(Term::Const(DataValue(t.number()?))),
        _ => Ok(Term::Var(Var(t.ident("a variable or data value")?))),
    })?;
    Ok(Atom::new(rel, args))
}

fn disjunct(toks: &mut Tokens) -> Result<Disjunct, TextError> {
    let head = query_atom(toks)?;
    toks.expect(&Tok::ColonDash)?;
    let mut d = Disjunct::new(head, [], [], []);
    if toks.eat(&Tok::Dot) {
        return Ok(d);
    }
    loop {
        match (toks.peek(), toks.peek_at(1)) {
            (Some(Tok::Bang), _) => {
                toks.bump();
                d.neg.insert(query_atom(toks)?);
            }
            (Some(Tok::Ident(_)), Some(Tok::NotEq)) => {
                let a = Var(toks.ident("a variable")?);
                toks.bump();
                let b = Var(toks.ident("a variable")?);
                d.ineqs.insert(Inequality::new(a, b));
            }
            (Some(Tok::Ident(_)), _) => {
                d.pos.insert(query_atom(toks)?);
            }
            _ => return Err(toks.unexpected("a literal")),
        }
        if toks.eat(&Tok::Dot) {
            return Ok(d);
        }
        toks.expect(&Tok::Comma)?;
    }
}

/// Parses and validates a query. Disjuncts sharing variables are renamed apart.
pub fn parse_query(text: &str) -> Result<Query, TextError> {
    let mut toks = Tokens::new(text)?;
    let mut ds = Vec::new();
    while !toks.is_done() {
        ds.push(disjunct(&mut toks)?);
    }
    let q = Query::new(ds)?;
    let schema = q.body_schema()?;
    validate(&q, &schema).map_err(TextError::Invalid)?;
    Ok(q)
}

/// Parses ground facts `R(1,7,7).`; duplicates collapse.
pub fn parse_instance(text: &str) -> Result<Instance, TextError> {
    let mut toks = Tokens::new(text)?;
    let mut out = Instance::new();
    while !toks.is_done() {
        out.insert(ground_fact(&mut toks)?);
        toks.expect(&Tok::Dot)?;
    }
    Schema::of_instance(&out)?;
    Ok(out)
}

/// Parses a policy, accepting `*except` rules.
pub fn parse_policy(text: &str) -> Result<DistributionPolicy, TextError> {
    parse_policy_with(text, false)
}

/// Parses a policy; with `strict` set, only plain rule atoms are accepted.
pub fn parse_policy_with(text: &str, strict: bool) -> Result<DistributionPolicy, TextError> {
    let mut toks = Tokens::new(text)?;
    match toks.peek() {
        Some(Tok::Ident(k)) if k == "universe" => {
            toks.bump();
        }
        _ => return Err(toks.unexpected("`universe`")),
    }
    let universe = universe_spec(&mut toks)?;
    let mut rules = Vec::new();
    let mut nodes = Vec::new();
    while !toks.is_done() {
        match toks.peek() {
            Some(Tok::Ident(k)) if k == "node" => {
                toks.bump();
            }
            _ => return Err(toks.unexpected("`node`")),
        }
        let node = match toks.bump() {
            Some(Tok::Ident(s)) => s,
            Some(Tok::Number(n)) => n.to_string(),
            _ => return Err(toks.unexpected("a node name")),
        };
        toks.expect(&Tok::Colon)?;
        let bare = match (toks.peek(), toks.peek_at(1)) {
            (None, _) => true,
            (Some(Tok::Ident(k)), next) => k == "node" && next != Some(&Tok::LParen),
            _ => false,
        };
        if bare {
            nodes.push(NodeId(node));
        } else if toks.peek() == Some(&Tok::Star) {
            let span = toks.span();
            toks.bump();
            match toks.bump() {
                Some(Tok::Ident(k)) if k == "except" => {}
                _ => return Err(TextError::syntax(span, "expected `*except`")),
            }
            if strict {
                return Err(TextError::ExceptInStrictMode { node });
            }
            let mut excluded = BTreeSet::new();
            if matches!((toks.peek(), toks.peek_at(1)), (Some(Tok::Ident(_)), Some(Tok::LParen))) {
                loop {
                    excluded.insert(ground_fact(&mut toks)?);
                    if !toks.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            rules.push((NodeId(node), Rule::Except(excluded)));
        } else {
            rules.push((NodeId(node), Rule::Pattern(rule_atom(&mut toks)?)));
        }
    }
    let p = DistributionPolicy::with_network(universe, nodes, rules)?;
    p.schema()?;
    Ok(p)
}

fn universe_spec(toks: &mut Tokens) -> Result<BTreeSet<DataValue>, TextError> {
    if toks.eat(&Tok::LBrace) {
        let mut out = BTreeSet::new();
        if toks.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.insert(DataValue(toks.number()?));
            if toks.eat(&Tok::RBrace) {
                return Ok(out);
            }
            toks.expect(&Tok::Comma)?;
        }
    }
    let span = toks.span();
    let lo = toks.number()?;
    toks.expect(&Tok::DotDot)?;
    let hi = toks.number()?;
    if hi < lo {
        return Err(TextError::syntax(span, format!("empty range {lo}..{hi}")));
    }
    if hi - lo >= 1 << 20 {
        return Err(TextError::syntax(span, format!("range {lo}..{hi} is too large")));
    }
    Ok((lo..=hi).map(DataValue).collect())
}

/// Parses an undirected graph: the vertex count, then one `u v` pair per edge.
pub fn parse_graph(text: &str) -> Result<Graph, TextError> {
    let mut toks = Tokens::new(text)?;
    let n_span = toks.span();
    let n = toks.number()?;
    if n > 64 {
        return Err(TextError::syntax(n_span, "at most 64 vertices are supported"));
    }
    let n = n as usize;
    let mut edges = Vec::new();
    while !toks.is_done() {
        let span = toks.span();
        let u = toks.number()? as usize;
        let v = toks.number()? as usize;
        if u >= n || v >= n {
            return Err(TextError::syntax(span, format!("edge {u} {v} names a vertex outside 0..{n}")));
        }
        edges.push((u, v));
    }
    Ok(Graph::new(n, edges))
}

fn write_atom(out: &mut String, a: &Atom) {
    let _ = write!(out, "{a}");
}

/// Canonical text of one disjunct: positive atoms, negated atoms, inequalities,
/// each group sorted.
pub fn disjunct_to_string(d: &Disjunct) -> String {
    let mut out = String::new();
    write_atom(&mut out, &d.head);
    out.push_str(" :-");
    let mut lits = Vec::new();
    lits.extend(d.pos.iter().map(ToString::to_string));
    lits.extend(d.neg.iter().map(|a| format!("!{a}")));
    lits.extend(d.ineqs.iter().map(|Inequality(a, b)| format!("{a} != {b}")));
    if !lits.is_empty() {
        out.push(' ');
        out.push_str(&lits.join(", "));
    }
    out.push('.');
    out
}

impl fmt::Display for Disjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&disjunct_to_string(self))
    }
}

/// Disjuncts separated by spaces; [`query_to_string`] gives the file form.
impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.disjuncts().iter().map(disjunct_to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// One line per disjunct, in disjunct order.
pub fn query_to_string(q: &Query) -> String {
    q.disjuncts()
        .iter()
        .map(|d| disjunct_to_string(d) + "\n")
        .collect()
}

/// One fact per line, sorted.
pub fn instance_to_string(i: &Instance) -> String {
    i.iter().map(|f| format!("{f}.\n")).collect()
}

/// The universe as an explicit set, then one line per rule in sorted order.
/// Nodes without rules come first as bare `node n:` lines.
pub fn policy_to_string(p: &DistributionPolicy) -> String {
    let values: Vec<String> = p.universe().iter().map(ToString::to_string).collect();
    let mut out = format!("universe {{{}}}\n", values.join(","));
    for node in p.network() {
        if p.rules_of(node).next().is_none() {
            let _ = writeln!(out, "node {node}:");
        }
    }
    for (node, rule) in p.rules() {
        match rule {
            Rule::Pattern(a) => {
                let _ = writeln!(out, "node {node}: {a}");
            }
            Rule::Except(fs) => {
                let facts: Vec<String> = fs.iter().map(ToString::to_string).collect();
                if facts.is_empty() {
                    let _ = writeln!(out, "node {node}: *except");
                } else {
                    let _ = writeln!(out, "node {node}: *except {}", facts.join(", "));
                }
            }
        }
    }
    out
}

/// Vertex count on the first line, then one edge per line.
pub fn graph_to_string(g: &Graph) -> String {
    let mut out = format!("{}\n", g.vertices());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Merges the schemas of every artifact, failing on an arity conflict.
pub fn infer_schema<'a>(
    queries: impl IntoIterator<Item = &'a Query>,
    instances: impl IntoIterator<Item = &'a Instance>,
    policies: impl IntoIterator<Item = &'a DistributionPolicy>,
) -> Result<Schema, SchemaError> {
    let mut s = Schema::new();
    for q in queries {
        s.merge(&q.body_schema()?)?;
        s.declare(q.head_relation(), q.head_arity())?;
    }
    for i in instances {
        s.merge(&Schema::of_instance(i)?)?;
    }
    for p in policies {
        s.merge(&p.schema()?)?;
    }
    Ok(s)
}
