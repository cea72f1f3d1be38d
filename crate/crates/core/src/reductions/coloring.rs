//! Full-query containment instances encoding graph 3-colorability.

use std::collections::BTreeSet;

use super::ReductionError;
use crate::model::{Atom, Disjunct, Query, Term, Var};

/// An undirected graph on vertices `0..n`. Edges are stored as sorted,
/// deduplicated `(u, v)` pairs with `u <= v`; self-loops are kept.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// # Panics
    /// If an edge names a vertex `>= n`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .map(|(u, v)| {
                assert!(u < n && v < n, "edge ({u},{v}) outside 0..{n}");
                (u.min(v), u.max(v))
            })
            .collect();
        Graph {
            n,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn complete(n: usize) -> Self {
        Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn cycle(n: usize) -> Self {
        Graph::new(n, (0..n).map(|u| (u, (u + 1) % n)))
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|v| (v - 1, v)))
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Largest graph [`brute_3colorable`] accepts.
pub const BRUTE_FORCE_MAX_VERTICES: usize = 12;

fn x(v: usize) -> Var {
    Var(format!("x{v}"))
}

fn y(v: usize) -> Var {
    Var(format!("y{v}"))
}

fn edge_atom(u: usize, v: usize) -> Atom {
    Atom::new("E", vec![Term::Var(x(u)), Term::Var(x(v))])
}

fn label_atom(v: usize, color: Var) -> Atom {
    Atom::new("L", vec![Term::Var(x(v)), Term::Var(color)])
}

/// Head and body of the labelling query with color variable `color(v)` at
/// vertex `v`.
fn labelling(g: &Graph, color: impl Fn(usize) -> Var) -> (Atom, Vec<Atom>) {
    let n = g.vertices();
    let head_args = (0..n).map(|v| Term::Var(x(v))).chain((0..n).map(|v| Term::Var(color(v))));
    let head = Atom::new("H", head_args.collect());
    let mut pos: Vec<Atom> = g.edges().iter().map(|&(u, v)| edge_atom(u, v)).collect();
    pos.extend((0..n).map(|v| label_atom(v, color(v))));
    (head, pos)
}

/// Builds full queries `(q1, q2)` over `E/2` and `L/2` with `q1 ⊆ q2` exactly
/// when `g` has no proper 3-coloring.
///
/// `q1` outputs node and color tuples of labelled copies of `g`. `q2` has one
/// disjunct per edge that forces both endpoint colors to one variable `y`, and
/// one disjunct per 4-set of color variables requiring them pairwise distinct.
pub fn gen_3col(g: &Graph) -> Result<(Query, Query), ReductionError> {
    if g.edges().is_empty() {
        return Err(ReductionError::EmptyGraph);
    }
    let n = g.vertices();
    let (head, pos) = labelling(g, y);
    let q1 = Query::single(Disjunct::new(head.clone(), pos.clone(), [], []));

    let mut disjuncts = Vec::new();
    for &(a, b) in g.edges() {
        let (h, p) = labelling(g, |v| if v == a || v == b { Var::new("y") } else { y(v) });
        disjuncts.push(Disjunct::new(h, p, [], []));
    }
    for c in four_subsets(n) {
        let mut ineqs = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                ineqs.push((y(c[i]), y(c[j])));
            }
        }
        disjuncts.push(Disjunct::new(head.clone(), pos.clone(), [], ineqs));
    }
    Ok((q1, Query::new(disjuncts)?))
}

fn four_subsets(n: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Whether `g` has a proper 3-coloring, by trying all `3^n` colorings.
pub fn brute_3colorable(g: &Graph) -> Result<bool, ReductionError> {
    let n = g.vertices();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(ReductionError::TooManyVertices {
            n,
            max: BRUTE_FORCE_MAX_VERTICES,
        });
    }
    let mut colors = vec![0u8; n];
    loop {
        if g.edges().iter().all(|&(u, v)| colors[u] != colors[v]) {
            return Ok(true);
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(false);
            }
            colors[i] += 1;
            if colors[i] < 3 {
                break;
            }
            colors[i] = 0;
            i += 1;
        }
    }
}
