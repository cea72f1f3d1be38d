//! Deciders for parallel-soundness, -completeness and -correctness of unions
//! of conjunctive queries with negation and inequalities under enumerated
//! distribution policies, containment deciders for the same query classes,
//! and generators for the reductions between these problems.

pub mod decide;
pub mod eval;
pub mod model;
pub mod policy;
pub mod reductions;
pub mod textio;
