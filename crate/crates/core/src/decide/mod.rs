//! Decision procedures for parallel-soundness, -completeness and -correctness
//! over all instances, and for query containment.
//!
//! Every decider returns a [`DecisionReport`]. A negative verdict always carries
//! a witness that can be re-checked with [`verify_parallel`] or
//! [`verify_containment`].

mod containment;
mod monotone;
mod search;
pub(crate) mod space;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use containment::{contains_bounded, contains_cq, contains_full_poly, contains_full_ucq};
pub use monotone::decide_parallel_monotone;
pub use search::decide_parallel_search;

use crate::eval::evaluate;
use crate::model::{Fact, Instance, Query, SchemaError, Valuation};
use crate::policy::{check_on_instance, DistributionPolicy, NodeId, PolicyError};

/// Which property of a query under a policy is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParallelMode {
    Sound,
    Complete,
    Correct,
}

impl ParallelMode {
    pub const ALL: [ParallelMode; 3] = [ParallelMode::Sound, ParallelMode::Complete, ParallelMode::Correct];

    pub fn as_str(self) -> &'static str {
        match self {
            ParallelMode::Sound => "sound",
            ParallelMode::Complete => "complete",
            ParallelMode::Correct => "correct",
        }
    }
}

impl fmt::Display for ParallelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown mode `{0}` (expected sound, complete or correct)")]
pub struct ParseModeError(pub String);

impl FromStr for ParallelMode {
    type Err = ParseModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sound" => Ok(ParallelMode::Sound),
            "complete" => Ok(ParallelMode::Complete),
            "correct" => Ok(ParallelMode::Correct),
            other => Err(ParseModeError(other.to_string())),
        }
    }
}

/// Why a search stopped without a verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inconclusive {
    /// The candidate budget ran out before the space was exhausted.
    BudgetExceeded { budget: u64 },
    /// No counterexample exists up to the requested domain size, but that size
    /// is below the bound needed for a positive answer.
    DomainBound { bound: usize, required: usize },
}

impl fmt::Display for Inconclusive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inconclusive::BudgetExceeded { budget } => write!(f, "budget of {budget} candidates exceeded"),
            Inconclusive::DomainBound { bound, required } => {
                write!(f, "no counterexample with at most {bound} values; {required} are needed to conclude")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive(Inconclusive),
}

/// A counterexample. For parallel problems `violates` names the property the
/// instance breaks; `node` is set when a node derives a fact that is not a
/// global answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub instance: Instance,
    pub fact: Option<Fact>,
    pub valuation: Option<Valuation>,
    pub node: Option<NodeId>,
    pub violates: Option<ParallelMode>,
}

impl Witness {
    pub fn instance(instance: Instance) -> Self {
        Witness {
            instance,
            fact: None,
            valuation: None,
            node: None,
            violates: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub candidates_examined: u64,
    pub elapsed_ms: u64,
    pub orphans: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionReport {
    pub problem: Option<String>,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub stats: Option<Stats>,
}

impl DecisionReport {
    pub fn holds() -> Self {
        DecisionReport {
            problem: None,
            verdict: Verdict::Holds,
            witness: None,
            stats: None,
        }
    }

    pub fn violated(witness: Witness) -> Self {
        DecisionReport {
            problem: None,
            verdict: Verdict::Violated,
            witness: Some(witness),
            stats: None,
        }
    }

    pub fn inconclusive(reason: Inconclusive) -> Self {
        DecisionReport {
            problem: None,
            verdict: Verdict::Inconclusive(reason),
            witness: None,
            stats: None,
        }
    }

    pub fn with_problem(mut self, problem: impl Into<String>) -> Self {
        self.problem = Some(problem.into());
        self
    }

    pub fn with_stats(mut self, stats: Stats) -> Self {
        self.stats = Some(stats);
        self
    }

    /// `Some(true)` / `Some(false)` for a verdict, `None` when inconclusive.
    pub fn outcome(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Holds => Some(true),
            Verdict::Violated => Some(false),
            Verdict::Inconclusive(_) => None,
        }
    }

    pub fn is_holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecideError {
    #[error("query has negated atoms; use decide_parallel_search instead")]
    NegationNotSupported,
    #[error("{side} query must have exactly one disjunct")]
    NotSingleDisjunct { side: &'static str },
    #[error("{side} query must be full (every variable in the head)")]
    NotFull { side: &'static str },
    #[error("{side} query must be free of negation")]
    HasNegation { side: &'static str },
    #[error("{side} query must be free of inequalities")]
    HasInequalities { side: &'static str },
    #[error("queries have different heads: {lhs} vs {rhs}")]
    HeadMismatch { lhs: String, rhs: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Limits for the exhaustive searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Maximum number of candidate instances examined.
    pub budget: u64,
    /// Largest counterexample domain tried; defaults to varmax of the query.
    pub domain_bound: Option<usize>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

pub const DEFAULT_BUDGET: u64 = 10_000_000;

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: DEFAULT_BUDGET,
            domain_bound: None,
            jobs: None,
        }
    }
}

/// Picks the valuation-based decider for negation-free queries and the
/// counterexample search otherwise.
pub fn decide_parallel(
    q: &Query,
    p: &DistributionPolicy,
    mode: ParallelMode,
    opts: &SearchOptions,
) -> Result<DecisionReport, DecideError> {
    if q.has_negation() {
        return decide_parallel_search(q, p, mode, opts);
    }
    match mode {
        ParallelMode::Sound => Ok(DecisionReport::holds()
            .with_problem(format!("parallel-{mode}"))
            .with_stats(Stats::default())),
        ParallelMode::Complete | ParallelMode::Correct => {
            let mut r = decide_parallel_monotone(q, p)?;
            r.problem = Some(format!("parallel-{mode}"));
            if let Some(w) = r.witness.as_mut() {
                w.violates = Some(ParallelMode::Complete);
            }
            Ok(r)
        }
    }
}

/// Re-checks a parallel-problem witness: the instance must break the property
/// named by the report for `mode`.
pub fn verify_parallel(report: &DecisionReport, q: &Query, p: &DistributionPolicy, mode: ParallelMode) -> bool {
    let Some(w) = &report.witness else {
        return false;
    };
    let Ok(c) = check_on_instance(q, p, &w.instance) else {
        return false;
    };
    let claimed = w.violates.unwrap_or(mode);
    let breaks = match claimed {
        ParallelMode::Sound => !c.sound,
        ParallelMode::Complete => !c.complete,
        ParallelMode::Correct => !c.correct,
    };
    let mode_broken = match mode {
        ParallelMode::Sound => !c.sound,
        ParallelMode::Complete => !c.complete,
        ParallelMode::Correct => !c.correct,
    };
    breaks && mode_broken
}

/// Re-checks a containment witness: the fact is an answer of `q1` but not of
/// `q2` on the instance.
pub fn verify_containment(report: &DecisionReport, q1: &Query, q2: &Query) -> bool {
    let Some(w) = &report.witness else {
        return false;
    };
    let Some(f) = &w.fact else {
        return false;
    };
    evaluate(q1, &w.instance).contains(f) && !evaluate(q2, &w.instance).contains(f)
}
