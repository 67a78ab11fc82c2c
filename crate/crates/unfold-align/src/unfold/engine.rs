//! The unfolding engine: builds the complete finite prefix of a system
//! net under the cost or heuristic queue order, stopping at target
//! events.
//!
//! The loop follows the on-the-fly scheme: candidates enter the queue as
//! soon as they are discovered as possible extensions, carrying a fully
//! evaluated key; the minimal entry is popped, discarded if its past
//! contains a cut-off, appended otherwise, classified against the induced
//! marking table, and extended.

use super::heuristic::{Bound, Estimator};
use super::orders::{OrderKey, OrderKind};
use super::prefix::{EvId, EventState, Prefix, PrefixError};
use super::run::AlignmentRun;
use crate::petri::{Marking, SystemNet, TransId};
use crate::product::{CostModel, MoveNet};
use crate::scalar::CostValue;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Search budget; exceeding it aborts with partial statistics.
#[derive(Debug, Clone)]
pub struct Budget {
    pub max_events: Option<usize>,
    pub timeout: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_events: None,
            timeout: Some(Duration::from_secs(3)),
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            max_events: None,
            timeout: None,
        }
    }

    pub fn timeout_ms(ms: u64) -> Self {
        Budget {
            max_events: None,
            timeout: Some(Duration::from_millis(ms)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnfoldOptions {
    pub order: OrderKind,
    /// Stop at the first (optimal) target event instead of collecting all
    /// optimal runs.
    pub stop_at_first: bool,
    /// Stop draining once popped keys exceed the best target cost. Only
    /// relevant with `stop_at_first = false`; disabling it drains the
    /// queue completely (useful when the finished prefix itself matters).
    pub early_exit: bool,
    pub budget: Budget,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            order: OrderKind::Heuristic,
            stop_at_first: true,
            early_exit: true,
            budget: Budget::default(),
        }
    }
}

impl UnfoldOptions {
    pub fn with_order(order: OrderKind) -> Self {
        UnfoldOptions {
            order,
            ..Default::default()
        }
    }

    pub fn all_optimal(order: OrderKind) -> Self {
        UnfoldOptions {
            order,
            stop_at_first: false,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnfoldStats {
    /// Event nodes created as possible extensions.
    pub events_enqueued: usize,
    /// Events materialized with their postsets (cut-offs included).
    pub events_appended: usize,
    pub cutoffs: usize,
    pub discarded: usize,
    pub conditions: usize,
    pub popped: usize,
    pub queue_peak: usize,
    /// Set when the drain for additional optimal runs was cut short by
    /// the budget; the returned runs are still optimal.
    pub drain_truncated: bool,
}

#[derive(Debug, Error)]
pub enum UnfoldError {
    #[error("model is not easy sound: no complete run reaches the target marking")]
    ModelNotEasySound { stats: UnfoldStats },
    #[error("unfolding budget exceeded before any alignment was found")]
    BudgetExceeded { stats: UnfoldStats },
    #[error("the product net must be extended with a target first")]
    NotExtended,
    #[error(transparent)]
    Prefix(#[from] PrefixError),
}

/// Result of unfolding an extended product net.
#[derive(Debug)]
pub struct UnfoldOutcome<C> {
    /// Recorded optimal alignment runs (one unless `stop_at_first` was
    /// disabled; then every surviving optimal run).
    pub runs: Vec<AlignmentRun<C>>,
    /// `s([e*])` of the optimal target event.
    pub lowest_cost: C,
    pub stats: UnfoldStats,
    pub prefix: Prefix<C>,
}

/// Raw engine result over an arbitrary system net.
#[derive(Debug)]
pub struct EngineOutcome<C> {
    pub prefix: Prefix<C>,
    /// Target events popped, in pop order, with their configuration cost.
    pub target_hits: Vec<(EvId, C)>,
    pub lowest: Option<C>,
    pub stats: UnfoldStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct QEntry<C> {
    key: OrderKey<C>,
    event: EvId,
}

impl<C: Ord + Clone + std::fmt::Debug + Eq> PartialOrd for QEntry<C> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<C: Ord + Clone + std::fmt::Debug + Eq> Ord for QEntry<C> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key).then(self.event.cmp(&other.event))
    }
}

enum Representative {
    InitialMarking,
    Event(EvId),
}

/// Unfolds any system net with per-transition costs. Public primarily for
/// the extended-product wrapper [`unfold`]; reachability-style uses on
/// raw nets are test plumbing, not a supported interface.
#[doc(hidden)]
pub fn unfold_system_net<C: CostValue>(
    net: &SystemNet,
    costs: &[C],
    target: Option<TransId>,
    opts: &UnfoldOptions,
) -> Result<EngineOutcome<C>, UnfoldError> {
    let start = Instant::now();
    let mut stats = UnfoldStats::default();
    let mut prefix: Prefix<C> = Prefix::new(net);
    stats.conditions = prefix.n_conditions();
    let mut estimator = match opts.order {
        OrderKind::Heuristic => Some(Estimator::from_net(net, costs.to_vec())),
        OrderKind::Cost => None,
    };
    let mut imarks: HashMap<Marking, Representative> =
        HashMap::from([(net.m_init().clone(), Representative::InitialMarking)]);
    let mut queue: BinaryHeap<Reverse<QEntry<C>>> = BinaryHeap::new();

    let enqueue = |prefix: &mut Prefix<C>,
                   estimator: &mut Option<Estimator<C>>,
                   queue: &mut BinaryHeap<Reverse<QEntry<C>>>,
                   stats: &mut UnfoldStats,
                   t: TransId,
                   preset: Vec<super::prefix::CondId>|
     -> Result<(), UnfoldError> {
        let e = prefix.create_event(net, t, preset, costs)?;
        let cfg = prefix.local_configuration(e);
        let key = match estimator {
            Some(est) => {
                let bound = est.estimate(&prefix.event(e).mark);
                prefix.set_est(e, bound.clone());
                OrderKey::for_heuristic_order(&cfg, bound)
            }
            None => OrderKey::for_cost_order(&cfg),
        };
        queue.push(Reverse(QEntry { key, event: e }));
        stats.events_enqueued += 1;
        stats.queue_peak = stats.queue_peak.max(queue.len());
        Ok(())
    };

    let initial = prefix.initial_conditions().to_vec();
    for (t, preset) in prefix.possible_extensions(net, &initial) {
        enqueue(
            &mut prefix,
            &mut estimator,
            &mut queue,
            &mut stats,
            t,
            preset,
        )?;
    }

    let mut target_hits: Vec<(EvId, C)> = Vec::new();
    let mut lowest: Option<C> = None;
    #[cfg(debug_assertions)]
    let mut last_key: Option<OrderKey<C>> = None;

    while let Some(Reverse(entry)) = queue.pop() {
        stats.popped += 1;
        let out_of_budget = opts
            .budget
            .timeout
            .map(|t| start.elapsed() > t)
            .unwrap_or(false)
            || opts
                .budget
                .max_events
                .map(|m| prefix.n_events() > m)
                .unwrap_or(false);
        if out_of_budget {
            if target_hits.is_empty() {
                return Err(UnfoldError::BudgetExceeded { stats });
            }
            stats.drain_truncated = true;
            break;
        }
        #[cfg(debug_assertions)]
        {
            // Popped keys strictly increase: keys are total on distinct
            // configurations and extensions never undercut their causes.
            if let Some(prev) = &last_key {
                debug_assert!(prev < &entry.key, "queue keys regressed");
            }
            last_key = Some(entry.key.clone());
        }
        if let Some(best) = &lowest {
            let beyond = match opts.order {
                OrderKind::Cost => entry.key.s > *best,
                OrderKind::Heuristic => entry.key.f > Bound::Finite(best.clone()),
            };
            if beyond && opts.early_exit {
                break;
            }
        }
        let e = entry.event;
        if Some(prefix.event(e).transition) == target {
            // A target event: record its run; its local configuration is
            // complete by construction.
            prefix.append_event(net, e);
            stats.events_appended += 1;
            stats.conditions = prefix.n_conditions();
            let cost = prefix.event(e).cost.clone();
            debug_assert!(lowest.as_ref().map(|l| *l <= cost).unwrap_or(true));
            if lowest.is_none() {
                lowest = Some(cost.clone());
            }
            target_hits.push((e, cost));
            if opts.stop_at_first {
                break;
            }
            continue;
        }
        // Drop events whose past runs through a cut-off.
        let has_cutoff_past = prefix
            .event(e)
            .config
            .iter()
            .any(|&a| a != e.0 && prefix.event(EvId(a)).state == EventState::Cutoff);
        if has_cutoff_past {
            prefix.set_state(e, EventState::Discarded);
            stats.discarded += 1;
            continue;
        }
        let new_conds = prefix.append_event(net, e);
        stats.events_appended += 1;
        stats.conditions = prefix.n_conditions();
        let mark = prefix.event(e).mark.clone();
        if let Some(rep) = imarks.get(&mark) {
            prefix.set_state(e, EventState::Cutoff);
            stats.cutoffs += 1;
            if let Representative::Event(r) = rep {
                // The representative was popped earlier, so its local
                // configuration precedes this one in the active order.
                debug_assert!(key_of(&prefix, *r) < key_of(&prefix, e));
            }
        } else {
            imarks.insert(mark, Representative::Event(e));
            for (t, preset) in prefix.possible_extensions(net, &new_conds) {
                enqueue(
                    &mut prefix,
                    &mut estimator,
                    &mut queue,
                    &mut stats,
                    t,
                    preset,
                )?;
            }
        }
    }

    Ok(EngineOutcome {
        prefix,
        target_hits,
        lowest,
        stats,
    })
}

/// Unfolds an extended product net into optimal alignment run(s).
///
/// With `stop_at_first` the first target event popped yields the single
/// optimal run. Otherwise the search continues and returns every optimal
/// run still represented in the prefix (cut-offs can merge equal-cost
/// branches through a shared marking).
pub fn unfold<C: CostValue>(
    spn: &MoveNet,
    cm: &CostModel<C>,
    opts: &UnfoldOptions,
) -> Result<UnfoldOutcome<C>, UnfoldError> {
    let target = spn.target().ok_or(UnfoldError::NotExtended)?;
    let costs = spn.move_costs(cm);
    let outcome = unfold_system_net(&spn.net, &costs, Some(target), opts)?;
    let EngineOutcome {
        prefix,
        target_hits,
        lowest,
        stats,
    } = outcome;
    let Some(lowest_cost) = lowest else {
        return Err(UnfoldError::ModelNotEasySound { stats });
    };
    let runs: Vec<AlignmentRun<C>> = target_hits
        .iter()
        .filter(|(_, c)| *c == lowest_cost)
        .map(|&(e, _)| {
            AlignmentRun::from_prefix(spn, &prefix, e).expect("recorded target event yields a run")
        })
        .collect();
    Ok(UnfoldOutcome {
        runs,
        lowest_cost,
        stats,
        prefix,
    })
}

/// Whether an event was classified as a cut-off in the finished prefix.
pub fn is_cutoff<C: CostValue>(prefix: &Prefix<C>, e: EvId) -> bool {
    prefix.event(e).state == EventState::Cutoff
}

/// The queue key of an event as it was (or would have been) enqueued;
/// under the cost order the cached estimate is zero, making `f = s`.
fn key_of<C: CostValue>(prefix: &Prefix<C>, e: EvId) -> OrderKey<C> {
    let cfg = prefix.local_configuration(e);
    OrderKey::for_heuristic_order(&cfg, prefix.event(e).est.clone())
}
