//! Partially-ordered alignments between event data and Petri net models.
//!
//! Given a partially ordered trace (events with overlapping time intervals
//! are concurrent) and a 1-safe system net, this crate computes an optimal
//! alignment by unfolding an extended synchronous product net into a
//! complete finite prefix. Two queue orders drive the unfolding: a
//! cost-based adequate order and a heuristic order directed by a
//! marking-equation lower bound. A classic A*-on-reachability-graph
//! aligner is included as an independent baseline, plus deviation
//! diagnostics and static chevron visualizations of the results.
//!
//! Cost arithmetic is generic over [`scalar::CostValue`]; the default
//! concrete scalar is [`Rational`] (arbitrary-precision, exact), which
//! keeps queue tie-breaking and optimality checks free of rounding.

pub mod align;
pub mod aligner;
pub mod baseline;
pub mod bench;
pub mod cli;
pub mod dag;
pub mod fixtures;
pub mod io;
pub mod petri;
pub mod product;
pub mod ptrace;
pub mod report;
pub mod scalar;
pub mod unfold;
pub mod viz;

pub use scalar::{CostValue, Rational};

/// Default exact cost scalar used by the CLI and the shipped fixtures.
pub type Cost = Rational;
