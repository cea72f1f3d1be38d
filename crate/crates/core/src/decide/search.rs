//! Exhaustive counterexample search for the parallel problems.
//!
//! Candidates are enumerated in one global order: domains `D ⊆ U` by size and
//! then lexicographically, and within a domain the instances `I ⊆ facts(σ, D)`
//! by cardinality and then lexicographically on fact indices. An instance whose
//! active domain is a strict subset of `D` was already examined under that
//! smaller domain and is skipped, though it still counts against the budget.
//! Domains are searched concurrently, but every candidate has a fixed global
//! rank, so the reported witness and the budget cut-off do not depend on
//! scheduling.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use super::space::{subset_count, Bits, Combinations, FactSpace};
use super::{DecideError, DecisionReport, Inconclusive, ParallelMode, SearchOptions, Stats, Witness};
use crate::eval::Assignments;
use crate::model::{DataValue, Fact, Query, Schema, Valuation};
use crate::policy::{responsible, DistributionPolicy, NodeId};

const CHUNK: usize = 256;

struct Compiled {
    valuation: Valuation,
    head: usize,
    req: Bits,
    proh: Bits,
}

/// Everything needed to test candidates over one domain.
struct DomainSpace {
    space: FactSpace,
    heads: Vec<Fact>,
    valuations: Vec<Compiled>,
    node_masks: Vec<(NodeId, Bits)>,
    value_masks: Vec<u64>,
    full_mask: u64,
}

impl DomainSpace {
    fn new(q: &Query, p: &DistributionPolicy, schema: &Schema, domain: &[DataValue]) -> Self {
        let dset = domain.iter().copied().collect();
        let space = FactSpace::new(schema, &dset);
        let pos_of: BTreeMap<DataValue, usize> = domain.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let value_masks = space
            .facts
            .iter()
            .map(|f| f.args.iter().fold(0u64, |m, v| m | 1 << pos_of[v]))
            .collect();
        let full_mask = if domain.is_empty() { 0 } else { u64::MAX >> (64 - domain.len()) };

        let mut head_ids: BTreeMap<Fact, usize> = BTreeMap::new();
        let mut valuations = Vec::new();
        for (di, d) in q.disjuncts().iter().enumerate() {
            for a in Assignments::new(d.vars(), domain.iter().copied()) {
                let v = Valuation::new(di, a);
                if !v.is_consistent(q) {
                    continue;
                }
                let mut req = space.empty();
                for f in v.required(q).iter() {
                    req.set(space.id(f).expect("body facts lie in the domain space"));
                }
                let mut proh = space.empty();
                for f in v.prohibited(q).iter() {
                    proh.set(space.id(f).expect("body facts lie in the domain space"));
                }
                let next = head_ids.len();
                let head = *head_ids.entry(v.head(q)).or_insert(next);
                valuations.push(Compiled {
                    valuation: v,
                    head,
                    req,
                    proh,
                });
            }
        }
        let mut heads = vec![Fact::new("", []); head_ids.len()];
        for (f, i) in head_ids {
            heads[i] = f;
        }
        let node_masks = p
            .network()
            .iter()
            .map(|n| {
                let mut m = space.empty();
                for (i, f) in space.facts.iter().enumerate() {
                    if responsible(p, n, f) {
                        m.set(i);
                    }
                }
                (n.clone(), m)
            })
            .collect();
        DomainSpace {
            space,
            heads,
            valuations,
            node_masks,
            value_masks,
            full_mask,
        }
    }

    /// Finds a violation of `mode` on candidate `j`. Completeness is checked
    /// before soundness.
    fn violation(&self, j: &Bits, mode: ParallelMode, global: &mut [Option<usize>], local: &mut [bool]) -> Option<Witness> {
        global.iter_mut().for_each(|g| *g = None);
        for (vi, c) in self.valuations.iter().enumerate() {
            if global[c.head].is_none() && c.req.is_subset(j) && !c.proh.intersects(j) {
                global[c.head] = Some(vi);
            }
        }
        let instance = || self.space.instance_of(j);
        if mode != ParallelMode::Sound {
            local.iter_mut().for_each(|l| *l = false);
            for (_, m) in &self.node_masks {
                for c in &self.valuations {
                    if !local[c.head] && c.req.is_subset_masked(j, m) && !c.proh.intersects_masked(j, m) {
                        local[c.head] = true;
                    }
                }
            }
            let missing = (0..self.heads.len())
                .filter(|&h| global[h].is_some() && !local[h])
                .min_by(|&a, &b| self.heads[a].cmp(&self.heads[b]));
            if let Some(h) = missing {
                let vi = global[h].expect("head is derived globally");
                return Some(Witness {
                    instance: instance(),
                    fact: Some(self.heads[h].clone()),
                    valuation: Some(self.valuations[vi].valuation.clone()),
                    node: None,
                    violates: Some(ParallelMode::Complete),
                });
            }
        }
        if mode != ParallelMode::Complete {
            for (n, m) in &self.node_masks {
                for c in &self.valuations {
                    if global[c.head].is_none() && c.req.is_subset_masked(j, m) && !c.proh.intersects_masked(j, m) {
                        return Some(Witness {
                            instance: instance(),
                            fact: Some(self.heads[c.head].clone()),
                            valuation: Some(c.valuation.clone()),
                            node: Some(n.clone()),
                            violates: Some(ParallelMode::Sound),
                        });
                    }
                }
            }
        }
        None
    }
}

enum JobResult {
    Exhausted,
    Hit { rank: u64, witness: Witness },
    Truncated,
    Aborted,
}

struct Job {
    index: usize,
    domain: Vec<DataValue>,
    offset: u64,
}

fn run_job(
    job: &Job,
    q: &Query,
    p: &DistributionPolicy,
    schema: &Schema,
    mode: ParallelMode,
    budget: u64,
    first_hit: &AtomicUsize,
) -> JobResult {
    if job.offset >= budget {
        return JobResult::Truncated;
    }
    let ds = DomainSpace::new(q, p, schema, &job.domain);
    let mut j = ds.space.empty();
    let mut global = vec![None; ds.heads.len()];
    let mut local = vec![false; ds.heads.len()];
    for (rank, combo) in Combinations::new(ds.space.len()).enumerate() {
        let rank = rank as u64;
        if job.offset.saturating_add(rank) >= budget {
            return JobResult::Truncated;
        }
        if rank.is_multiple_of(1024) && first_hit.load(Ordering::Relaxed) < job.index {
            return JobResult::Aborted;
        }
        let adom = combo.iter().fold(0u64, |m, &i| m | ds.value_masks[i]);
        if adom != ds.full_mask {
            continue;
        }
        j.clear_all();
        for &i in &combo {
            j.set(i);
        }
        if let Some(witness) = ds.violation(&j, mode, &mut global, &mut local) {
            first_hit.fetch_min(job.index, Ordering::Relaxed);
            return JobResult::Hit { rank, witness };
        }
    }
    JobResult::Exhausted
}

/// Decides `mode` for `q` under `p` by searching all instances over domains of
/// at most varmax(q) policy-universe values.
///
/// A budget of candidate instances bounds the work; running out yields an
/// inconclusive report rather than a verdict.
pub fn decide_parallel_search(
    q: &Query,
    p: &DistributionPolicy,
    mode: ParallelMode,
    opts: &SearchOptions,
) -> Result<DecisionReport, DecideError> {
    let start = Instant::now();
    let schema = q.body_schema()?;
    let universe: Vec<DataValue> = p.universe().iter().copied().collect();
    let required = q.varmax().min(universe.len());
    let bound = opts.domain_bound.unwrap_or(required).min(universe.len()).min(64);
    let pool = opts.jobs.map(|n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
    });

    let first_hit = AtomicUsize::new(usize::MAX);
    let mut domains = Combinations::up_to(universe.len(), bound);
    let mut offset = 0u64;
    let mut index = 0usize;
    let finish = |verdict: DecisionReport, examined: u64| {
        verdict.with_problem(format!("parallel-{mode}")).with_stats(Stats {
            candidates_examined: examined,
            elapsed_ms: start.elapsed().as_millis() as u64,
            orphans: None,
        })
    };
    loop {
        let mut chunk = Vec::with_capacity(CHUNK);
        for combo in domains.by_ref() {
            let domain: Vec<DataValue> = combo.iter().map(|&i| universe[i]).collect();
            let n_facts: usize = schema.iter().map(|(_, a)| domain.len().saturating_pow(a as u32)).sum();
            let size = subset_count(n_facts);
            chunk.push(Job { index, domain, offset });
            index += 1;
            offset = offset.saturating_add(size);
            if chunk.len() == CHUNK || offset >= opts.budget {
                break;
            }
        }
        if chunk.is_empty() {
            break;
        }
        let run = || {
            chunk
                .par_iter()
                .map(|job| run_job(job, q, p, &schema, mode, opts.budget, &first_hit))
                .collect::<Vec<_>>()
        };
        let results = match &pool {
            Some(pool) => pool.install(run),
            None => run(),
        };
        for (job, result) in chunk.iter().zip(results) {
            match result {
                JobResult::Exhausted => {}
                JobResult::Hit { rank, witness } => {
                    return Ok(finish(DecisionReport::violated(witness), job.offset + rank + 1));
                }
                JobResult::Truncated => {
                    return Ok(finish(
                        DecisionReport::inconclusive(Inconclusive::BudgetExceeded { budget: opts.budget }),
                        opts.budget,
                    ));
                }
                JobResult::Aborted => unreachable!("only jobs after a hit abort"),
            }
        }
    }
    let report = match opts.domain_bound {
        Some(k) if k < required => DecisionReport::inconclusive(Inconclusive::DomainBound {
            bound: k,
            required: q.varmax(),
        }),
        _ => DecisionReport::holds(),
    };
    Ok(finish(report, offset))
}
