//! Complete-finite-prefix unfolding of extended product nets.
//!
//! Submodules: [`prefix`] holds the branching-process arena and
//! possible-extension enumeration, [`orders`] the queue orders,
//! [`heuristic`] the marking-equation bound with its exact [`simplex`]
//! solver, [`run`] the extracted alignment runs and [`engine`] the search
//! loop itself.

pub mod engine;
pub mod heuristic;
pub mod orders;
pub mod prefix;
pub mod run;
pub mod simplex;

pub use engine::{
    is_cutoff, unfold, Budget, UnfoldError, UnfoldOptions, UnfoldOutcome, UnfoldStats,
};
pub use heuristic::{estimate_remaining, Bound, Estimator};
pub use orders::{order_cost, order_heuristic, OrderKey, OrderKind};
pub use prefix::{CondId, Condition, Configuration, EvId, EventNode, EventState, Prefix};
pub use run::{AlignmentRun, RunCondition, RunError, RunEvent};
