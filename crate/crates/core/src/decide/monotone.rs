//! Parallel-correctness of negation-free queries through minimal valuations.

use std::time::Instant;

use super::{DecideError, DecisionReport, Stats, Witness};
use crate::eval::minimal_valuations;
use crate::model::Query;
use crate::policy::{responsible, DistributionPolicy};

/// Holds iff for every minimal valuation over the policy universe some node is
/// responsible for every fact of V(body). For queries without negation this is
/// parallel-correctness, equivalently parallel-completeness.
///
/// On failure the witness is V(body) with the fact V(head) and the failing
/// valuation, the first such valuation in canonical order.
pub fn decide_parallel_monotone(q: &Query, p: &DistributionPolicy) -> Result<DecisionReport, DecideError> {
    if q.has_negation() {
        return Err(DecideError::NegationNotSupported);
    }
    let start = Instant::now();
    let mut examined = 0u64;
    let mut report = DecisionReport::holds();
    for v in minimal_valuations(q, p.universe()) {
        examined += 1;
        let body = v.body(q);
        let covered = p
            .network()
            .iter()
            .any(|n| body.iter().all(|f| responsible(p, n, f)));
        if !covered {
            report = DecisionReport::violated(Witness {
                instance: body,
                fact: Some(v.head(q)),
                valuation: Some(v),
                node: None,
                violates: None,
            });
            break;
        }
    }
    Ok(report.with_problem("parallel-correct").with_stats(Stats {
        candidates_examined: examined,
        elapsed_ms: start.elapsed().as_millis() as u64,
        orphans: None,
    }))
}
