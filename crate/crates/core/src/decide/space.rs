//! Indexed fact spaces, bitsets over them, and the canonical enumerations
//! shared by the exhaustive deciders.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{DataValue, Fact, Instance, Schema, Var};
use crate::policy::all_facts;

/// A fixed-width bitset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    pub(crate) fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    pub(crate) fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn clear_all(&mut self) {
        self.0.iter_mut().for_each(|w| *w = 0);
    }

    pub(crate) fn is_subset(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    pub(crate) fn intersects(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }

    /// `self ⊆ other ∩ mask`
    pub(crate) fn is_subset_masked(&self, other: &Bits, mask: &Bits) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .zip(&mask.0)
            .all(|((a, b), m)| a & !(b & m) == 0)
    }

    /// `self ∩ other ∩ mask ≠ ∅`
    pub(crate) fn intersects_masked(&self, other: &Bits, mask: &Bits) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .zip(&mask.0)
            .any(|((a, b), m)| a & b & m != 0)
    }

    pub(crate) fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| wi * 64 + b)
        })
    }
}

/// facts(σ, D) with a dense index in canonical order.
#[derive(Clone, Debug)]
pub(crate) struct FactSpace {
    pub(crate) facts: Vec<Fact>,
    index: BTreeMap<Fact, usize>,
}

impl FactSpace {
    pub(crate) fn new(schema: &Schema, domain: &BTreeSet<DataValue>) -> Self {
        let facts = all_facts(schema, domain);
        let index = facts.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        FactSpace { facts, index }
    }

    pub(crate) fn len(&self) -> usize {
        self.facts.len()
    }

    pub(crate) fn id(&self, f: &Fact) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub(crate) fn empty(&self) -> Bits {
        Bits::new(self.len())
    }

    /// Bitset of an instance; `None` if a fact lies outside the space.
    pub(crate) fn bits_of(&self, i: &Instance) -> Option<Bits> {
        let mut b = self.empty();
        for f in i {
            b.set(self.id(f)?);
        }
        Some(b)
    }

    pub(crate) fn instance_of(&self, b: &Bits) -> Instance {
        b.ones().map(|i| self.facts[i].clone()).collect()
    }
}

/// Subsets of `0..n` by cardinality, then lexicographically. The `k`-subsets
/// are produced as sorted index vectors.
pub(crate) struct Combinations {
    n: usize,
    max_k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub(crate) fn new(n: usize) -> Self {
        Self::up_to(n, n)
    }

    pub(crate) fn up_to(n: usize, max_k: usize) -> Self {
        Combinations {
            n,
            max_k: max_k.min(n),
            current: Some(Vec::new()),
        }
    }

    fn advance(&mut self) {
        let Some(cur) = self.current.as_mut() else {
            return;
        };
        let k = cur.len();
        let n = self.n;
        // Rightmost index that can still move right.
        let mut i = k;
        while i > 0 {
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                return;
            }
        }
        if k < self.max_k {
            *cur = (0..k + 1).collect();
        } else {
            self.current = None;
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        self.advance();
        Some(out)
    }
}

/// Number of subsets of an `n`-set, saturating.
pub(crate) fn subset_count(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        1u64 << n
    }
}

/// Restricted-growth assignments of `vars` (in the given order) to values
/// `0..max_values`: the first variable gets 0 and every later one gets at most
/// one more than the largest value used so far. These are exactly the
/// canonical representatives of assignments up to renaming of values.
pub(crate) fn restricted_growth(vars: &[Var], max_values: usize) -> Vec<BTreeMap<Var, DataValue>> {
    let mut out = Vec::new();
    let mut digits = Vec::with_capacity(vars.len());
    fn go(
        vars: &[Var],
        max_values: usize,
        digits: &mut Vec<u64>,
        used: u64,
        out: &mut Vec<BTreeMap<Var, DataValue>>,
    ) {
        if digits.len() == vars.len() {
            out.push(vars.iter().cloned().zip(digits.iter().map(|&d| DataValue(d))).collect());
            return;
        }
        let limit = (used + 1).min(max_values as u64);
        for d in 0..limit {
            digits.push(d);
            go(vars, max_values, digits, used.max(d + 1), out);
            digits.pop();
        }
    }
    go(vars, max_values, &mut digits, 0, &mut out);
    out
}
