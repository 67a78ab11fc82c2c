//! The two-step reference aligner: A* shortest path over the product
//! net's reachability graph, then replay of the winning firing sequence
//! into a partial order by unfolding with place cloning.
//!
//! Shares the cost model and the marking-equation heuristic with the
//! prefix engine, so benchmark comparisons isolate the search space.

use crate::aligner::{run_to_alignment_order, AlignmentOrder};
use crate::petri::{Marking, SystemNet, TransId};
use crate::product::{CostModel, MoveNet};
use crate::scalar::CostValue;
use crate::unfold::run::{RunCondition, RunEvent};
use crate::unfold::{AlignmentRun, Bound, Budget, Estimator};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no path to the target marking: model is not easy sound")]
    NoPath { stats: AstarStats },
    #[error("search budget exceeded")]
    BudgetExceeded { stats: AstarStats },
    #[error("invalid firing sequence: {0}")]
    InvalidSequence(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AstarStats {
    /// Markings expanded (popped and not already closed).
    pub expanded: usize,
    /// Distinct markings ever enqueued.
    pub discovered: usize,
    pub queue_peak: usize,
}

struct SearchNode<C> {
    marking: Marking,
    g: C,
    parent: Option<usize>,
    via: Option<TransId>,
}

#[derive(PartialEq, Eq)]
struct OpenEntry<C> {
    f: Bound<C>,
    h: Bound<C>,
    seq: usize,
    node: usize,
}

impl<C: Ord> Ord for OpenEntry<C> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // f first, then lower h, then FIFO.
        self.f
            .cmp(&other.f)
            .then_with(|| self.h.cmp(&other.h))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl<C: Ord> PartialOrd for OpenEntry<C> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A* over markings of the extended product net. Returns a minimum-cost
/// firing sequence from the initial marking to the target place (the
/// target transition included, its cost being zero) plus the cost.
pub fn astar_alignment<C: CostValue>(
    spn: &MoveNet,
    cm: &CostModel<C>,
    budget: &Budget,
) -> Result<(Vec<TransId>, C, AstarStats), BaselineError> {
    let start = Instant::now();
    let mut stats = AstarStats::default();
    let mut estimator = Estimator::new(spn, cm);
    let costs = spn.move_costs(cm);
    let goal = spn.net.m_final().clone();

    let mut arena: Vec<SearchNode<C>> = Vec::new();
    let mut best_g: HashMap<Marking, C> = HashMap::new();
    let mut open: BinaryHeap<Reverse<OpenEntry<C>>> = BinaryHeap::new();
    let mut seq_counter = 0usize;

    let h0 = estimator.estimate(spn.net.m_init());
    arena.push(SearchNode {
        marking: spn.net.m_init().clone(),
        g: C::zero(),
        parent: None,
        via: None,
    });
    best_g.insert(spn.net.m_init().clone(), C::zero());
    open.push(Reverse(OpenEntry {
        f: h0.clone(),
        h: h0,
        seq: seq_counter,
        node: 0,
    }));

    while let Some(Reverse(entry)) = open.pop() {
        let timed_out = budget.timeout.map(|t| start.elapsed() > t).unwrap_or(false)
            || budget
                .max_events
                .map(|m| stats.expanded > m)
                .unwrap_or(false);
        if timed_out {
            return Err(BaselineError::BudgetExceeded { stats });
        }
        let node_idx = entry.node;
        let (marking, g) = {
            let n = &arena[node_idx];
            (n.marking.clone(), n.g.clone())
        };
        // Stale entry: a cheaper path to this marking was expanded.
        if best_g.get(&marking).map(|b| *b < g).unwrap_or(false) {
            continue;
        }
        if marking == goal {
            let mut seq = Vec::new();
            let mut cur = Some(node_idx);
            while let Some(i) = cur {
                if let Some(t) = arena[i].via {
                    seq.push(t);
                }
                cur = arena[i].parent;
            }
            seq.reverse();
            let cost = spn.sequence_cost(cm, &seq);
            debug_assert_eq!(cost, g);
            return Ok((seq, cost, stats));
        }
        stats.expanded += 1;
        for t in spn.net.enabled(&marking) {
            let next = spn
                .net
                .fire(&marking, t)
                .map_err(|e| BaselineError::InvalidSequence(e.to_string()))?;
            let ng = g.clone() + costs[t.index()].clone();
            let improves = best_g.get(&next).map(|b| ng < *b).unwrap_or(true);
            if !improves {
                continue;
            }
            best_g.insert(next.clone(), ng.clone());
            let h = estimator.estimate(&next);
            if h == Bound::Infinite {
                // State equation rules this marking out entirely.
                continue;
            }
            let f = match &h {
                Bound::Finite(hv) => Bound::Finite(ng.clone() + hv.clone()),
                Bound::Infinite => unreachable!(),
            };
            seq_counter += 1;
            arena.push(SearchNode {
                marking: next,
                g: ng,
                parent: Some(node_idx),
                via: Some(t),
            });
            stats.discovered += 1;
            open.push(Reverse(OpenEntry {
                f,
                h,
                seq: seq_counter,
                node: arena.len() - 1,
            }));
            stats.queue_peak = stats.queue_peak.max(open.len());
        }
    }
    Err(BaselineError::NoPath { stats })
}

/// Replays a firing sequence on any system net into an occurrence-net
/// structure: every token production creates a fresh condition, so a
/// place seen again (a loop) is cloned rather than revisited.
pub fn replay_occurrence(
    net: &SystemNet,
    seq: &[TransId],
) -> Result<(Vec<RunCondition>, Vec<RunEvent>), BaselineError> {
    let mut conditions: Vec<RunCondition> = Vec::new();
    let mut holder: HashMap<crate::petri::PlaceId, usize> = HashMap::new();
    for p in net.m_init().iter() {
        holder.insert(p, conditions.len());
        conditions.push(RunCondition {
            place: p,
            side: crate::product::PlaceSide::Log, // refined by the caller
            producer: None,
            consumer: None,
        });
    }
    let mut events: Vec<RunEvent> = Vec::new();
    for (i, &t) in seq.iter().enumerate() {
        let mut preset = Vec::new();
        for &p in net.pre_t(t) {
            let c = holder.remove(&p).ok_or_else(|| {
                BaselineError::InvalidSequence(format!(
                    "transition {} not enabled at step {}",
                    net.trans_name(t),
                    i
                ))
            })?;
            conditions[c].consumer = Some(i);
            preset.push(c);
        }
        let mut postset = Vec::new();
        for &p in net.post_t(t) {
            if holder.contains_key(&p) {
                return Err(BaselineError::InvalidSequence(format!(
                    "place {} already marked at step {}",
                    net.place_name(p),
                    i
                )));
            }
            holder.insert(p, conditions.len());
            postset.push(conditions.len());
            conditions.push(RunCondition {
                place: p,
                side: crate::product::PlaceSide::Log,
                producer: Some(i),
                consumer: None,
            });
        }
        events.push(RunEvent {
            transition: t,
            mv: crate::product::Move::Target, // refined by the caller
            preset,
            postset,
        });
    }
    Ok((conditions, events))
}

/// Replays a complete firing sequence of the extended product net into an
/// alignment run (the same shape the prefix engine returns).
pub fn replay_to_run<C: CostValue>(
    spn: &MoveNet,
    cm: &CostModel<C>,
    seq: &[TransId],
) -> Result<AlignmentRun<C>, BaselineError> {
    if seq.last().copied() != spn.target() {
        return Err(BaselineError::InvalidSequence(
            "sequence must end with the target transition".into(),
        ));
    }
    let (mut conditions, mut events) = replay_occurrence(&spn.net, seq)?;
    for c in conditions.iter_mut() {
        c.side = spn.side(c.place);
    }
    for e in events.iter_mut() {
        e.mv = spn.move_of(e.transition).clone();
    }
    let run = AlignmentRun {
        cost: spn.sequence_cost(cm, seq),
        target_event: events.len() - 1,
        events,
        conditions,
    };
    let sinks = run.sink_conditions();
    if sinks.len() != 1 {
        return Err(BaselineError::InvalidSequence(format!(
            "sequence leaves {} unconsumed conditions",
            sinks.len()
        )));
    }
    Ok(run)
}

/// The classic two-step result: replay the sequence, then project it to
/// an alignment order.
pub fn replay_to_partial_order<C: CostValue>(
    spn: &MoveNet,
    cm: &CostModel<C>,
    seq: &[TransId],
) -> Result<AlignmentOrder, BaselineError> {
    Ok(run_to_alignment_order(&replay_to_run(spn, cm, seq)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::{decompose, diagnose};
    use crate::fixtures;
    use crate::product::extended_product;
    use crate::unfold::{unfold, OrderKind, UnfoldOptions};
    use crate::Rational;
    use num_traits::Zero;

    fn cm() -> CostModel<Rational> {
        CostModel::default()
    }

    #[test]
    fn astar_agrees_with_unfolder_on_the_corpus() {
        for f in fixtures::corpus() {
            let spn = extended_product(&f.trace, &f.model);
            let (_, cost, _) = astar_alignment(&spn, &cm(), &Budget::unlimited())
                .unwrap_or_else(|e| panic!("{}: {e}", f.name));
            let out = unfold(&spn, &cm(), &UnfoldOptions::with_order(OrderKind::Cost)).unwrap();
            assert_eq!(cost, out.lowest_cost, "{}: engines disagree", f.name);
            if let Some(expected) = &f.expected_cost {
                assert_eq!(&cost, expected, "{}: cost off", f.name);
            }
        }
    }

    #[test]
    fn fitting_trace_costs_nothing() {
        let f = fixtures::corpus()
            .into_iter()
            .find(|f| f.name == "parallel-3-fit")
            .unwrap();
        let spn = extended_product(&f.trace, &f.model);
        let (seq, cost, _) = astar_alignment(&spn, &cm(), &Budget::unlimited()).unwrap();
        assert!(cost.is_zero());
        assert_eq!(seq.last().copied(), spn.target());
    }

    #[test]
    fn interleavings_cost_astar_more_states_than_prefix_events() {
        // On a parallel product the reachability graph enumerates
        // interleavings that the prefix never materializes.
        let f = fixtures::corpus()
            .into_iter()
            .find(|f| f.name == "wide-and-5")
            .unwrap();
        let spn = extended_product(&f.trace, &f.model);
        let (_, _, stats) = astar_alignment(&spn, &cm(), &Budget::unlimited()).unwrap();
        let out = unfold(
            &spn,
            &cm(),
            &UnfoldOptions::with_order(OrderKind::Heuristic),
        )
        .unwrap();
        assert!(
            stats.expanded > out.stats.events_appended,
            "expected A* ({} expansions) to beat prefix events ({}) on concurrency",
            stats.expanded,
            out.stats.events_appended
        );
    }

    #[test]
    fn unsound_model_reports_no_path() {
        let model = crate::petri::quick_net(
            &["p0", "dead", "p1"],
            &[("ta", Some("a"), &["p0", "dead"], &["p1"])],
            &["p0"],
            &["p1"],
        );
        let trace = fixtures::trace("t", &[("a", 0, 1)]);
        let spn = extended_product(&trace, &model);
        assert!(matches!(
            astar_alignment(&spn, &cm(), &Budget::unlimited()),
            Err(BaselineError::NoPath { .. })
        ));
    }

    #[test]
    fn replay_without_loops_never_clones() {
        let (model, trace) = fixtures::fig5_instance();
        let spn = extended_product(&trace, &model);
        let (seq, _, _) = astar_alignment(&spn, &cm(), &Budget::unlimited()).unwrap();
        let order = replay_to_partial_order(&spn, &cm(), &seq).unwrap();
        assert_eq!(order.n_nodes(), seq.len() - 1);
        assert!(order.is_acyclic());
        let run = replay_to_run(&spn, &cm(), &seq).unwrap();
        // Loop-free: at most one condition per product place.
        let mut seen = std::collections::HashSet::new();
        for c in &run.conditions {
            assert!(seen.insert(c.place), "place cloned in a loop-free replay");
        }
    }

    #[test]
    fn replay_clones_places_on_loops_and_stays_acyclic() {
        let f = fixtures::corpus()
            .into_iter()
            .find(|f| f.name == "loop-three-rounds")
            .unwrap();
        let spn = extended_product(&f.trace, &f.model);
        let (seq, cost, _) = astar_alignment(&spn, &cm(), &Budget::unlimited()).unwrap();
        assert_eq!(cost, Rational::ratio(3, 10_000));
        let run = replay_to_run(&spn, &cm(), &seq).unwrap();
        let mut per_place: HashMap<crate::petri::PlaceId, usize> = HashMap::new();
        for c in &run.conditions {
            *per_place.entry(c.place).or_default() += 1;
        }
        assert!(
            per_place.values().any(|&n| n > 1),
            "loop lap must clone places"
        );
        let order = run_to_alignment_order(&run);
        assert!(order.is_acyclic());
    }

    #[test]
    fn replay_rejects_bad_sequences() {
        let (model, trace) = fixtures::fig5_instance();
        let spn = extended_product(&trace, &model);
        let err = replay_to_run(&spn, &cm(), &[crate::petri::TransId(0)]).unwrap_err();
        assert!(matches!(err, BaselineError::InvalidSequence(_)));
    }

    #[test]
    fn classic_route_reproduces_unfolding_diagnostics_on_fig5() {
        let (model, trace) = fixtures::fig5_instance();
        let spn = extended_product(&trace, &model);
        let (seq, cost, _) = astar_alignment(&spn, &cm(), &Budget::unlimited()).unwrap();
        let classic_order = replay_to_partial_order(&spn, &cm(), &seq).unwrap();
        let out = unfold(&spn, &cm(), &UnfoldOptions::default()).unwrap();
        assert_eq!(cost, out.lowest_cost);
        let unfolded_order = run_to_alignment_order(&out.runs[0]);
        assert!(classic_order.to_dag().isomorphic(&unfolded_order.to_dag()));
        let da = diagnose(&decompose(&classic_order, &cm()), true);
        let db = diagnose(&decompose(&unfolded_order, &cm()), true);
        assert_eq!(da.missing_deps.len(), db.missing_deps.len());
        assert_eq!(da.undesired_deps.len(), db.undesired_deps.len());
        assert_eq!(da.missing_events.len(), db.missing_events.len());
        assert_eq!(da.undesired_events.len(), db.undesired_events.len());
    }
}
