//! Bounded model checking and k-induction for LoopC, a small loop-structured
//! imperative language, together with the tooling around it: an explicit-state
//! oracle, static reductions, witnesses, a benchmark generator and a
//! resource-limited benchmarking harness.

pub mod lang;
pub mod ts;
pub mod cnf;
pub mod sat;
pub mod oracle;
pub mod engine;
pub mod witness;
pub mod reduce;
pub mod benchgen;
pub mod corpus;
pub mod harness;
