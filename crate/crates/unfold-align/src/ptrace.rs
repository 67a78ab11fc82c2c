//! Partially ordered traces and their conversion to trace nets.
//!
//! An event `a` precedes `b` iff `a` ends strictly before `b` starts;
//! overlapping intervals mean concurrency. The order is kept as its
//! transitive reduction, with the closure recomputed on demand.

use crate::dag::{self, LabeledDag};
use crate::petri::{PlaceId, SystemNet, TransId};
use thiserror::Error;

/// Event index within one p-trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u32);

impl EventId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One recorded activity execution with interval timestamps (epoch ms).
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub case_id: String,
    pub activity: String,
    pub start_ms: i64,
    pub end_ms: i64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("events with mixed case ids: {0} vs {1}")]
    MixedCaseIds(String, String),
    #[error("empty event list")]
    EmptyInput,
    #[error("event {activity} ends before it starts")]
    NegativeDuration { activity: String },
    #[error("order is not acyclic")]
    CyclicOrder,
}

/// A labeled DAG of events; the partial order is stored reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PTrace {
    pub case_id: String,
    /// Activity label per event, indexed by [`EventId`].
    labels: Vec<String>,
    /// Original event identifiers, for reporting.
    event_ids: Vec<String>,
    /// Transitive reduction of the strict partial order.
    order: Vec<(u32, u32)>,
}

impl PTrace {
    /// Builds a p-trace from explicit order edges (any mix of closure and
    /// reduction edges); they are reduced internally.
    pub fn from_parts(
        case_id: &str,
        labels: Vec<String>,
        edges: Vec<(u32, u32)>,
    ) -> Result<Self, TraceError> {
        if labels.is_empty() {
            return Err(TraceError::EmptyInput);
        }
        if !dag::is_acyclic(labels.len(), &edges) {
            return Err(TraceError::CyclicOrder);
        }
        let order = dag::transitive_reduction(labels.len(), &edges);
        let event_ids = (0..labels.len()).map(|i| format!("e{i}")).collect();
        Ok(PTrace {
            case_id: case_id.to_string(),
            labels,
            event_ids,
            order,
        })
    }

    pub fn n_events(&self) -> usize {
        self.labels.len()
    }

    pub fn events(&self) -> impl Iterator<Item = EventId> {
        (0..self.labels.len() as u32).map(EventId)
    }

    pub fn label(&self, e: EventId) -> &str {
        &self.labels[e.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn event_id(&self, e: EventId) -> &str {
        &self.event_ids[e.index()]
    }

    pub fn set_event_ids(&mut self, ids: Vec<String>) {
        assert_eq!(ids.len(), self.labels.len());
        self.event_ids = ids;
    }

    /// Edges of the transitive reduction.
    pub fn order(&self) -> &[(u32, u32)] {
        &self.order
    }

    /// Edges of the transitive closure (the full strict order ≺).
    pub fn order_closure(&self) -> Vec<(u32, u32)> {
        dag::closure_edges(self.n_events(), &self.order)
    }

    pub fn precedes(&self, a: EventId, b: EventId) -> bool {
        dag::closure(self.n_events(), &self.order).get(a.index(), b.index())
    }

    /// Events with no predecessor.
    pub fn minimal(&self) -> Vec<EventId> {
        let mut has_pred = vec![false; self.n_events()];
        for &(_, v) in &self.order {
            has_pred[v as usize] = true;
        }
        (0..self.n_events() as u32)
            .map(EventId)
            .filter(|e| !has_pred[e.index()])
            .collect()
    }

    /// Events with no successor.
    pub fn maximal(&self) -> Vec<EventId> {
        let mut has_succ = vec![false; self.n_events()];
        for &(u, _) in &self.order {
            has_succ[u as usize] = true;
        }
        (0..self.n_events() as u32)
            .map(EventId)
            .filter(|e| !has_succ[e.index()])
            .collect()
    }

    pub fn to_dag(&self) -> LabeledDag<String> {
        LabeledDag::new(self.labels.clone(), self.order.clone())
    }

    /// Variant grouping key: isomorphic labeled DAGs share one key
    /// (collisions are resolved by the exact isomorphism check).
    pub fn canonical_key(&self) -> String {
        self.to_dag().canonical_key()
    }
}

/// Derives the partial order from interval timestamps: `a ≺ b` iff
/// `end(a) < start(b)`. Events missing an end timestamp should be given
/// `end = start` by the caller (see the readers in [`crate::io`]).
pub fn derive_ptrace(events: &[RawEvent]) -> Result<PTrace, TraceError> {
    if events.is_empty() {
        return Err(TraceError::EmptyInput);
    }
    let case = &events[0].case_id;
    for e in events {
        if e.case_id != *case {
            return Err(TraceError::MixedCaseIds(case.clone(), e.case_id.clone()));
        }
        if e.end_ms < e.start_ms {
            return Err(TraceError::NegativeDuration {
                activity: e.activity.clone(),
            });
        }
    }
    let n = events.len();
    let mut edges = Vec::new();
    for (i, a) in events.iter().enumerate() {
        for (j, b) in events.iter().enumerate() {
            if i != j && a.end_ms < b.start_ms {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let labels = events.iter().map(|e| e.activity.clone()).collect();
    let mut trace = PTrace::from_parts(case, labels, edges)?;
    trace.set_event_ids((0..n).map(|i| format!("e{i}")).collect());
    Ok(trace)
}

/// A trace net: the p-trace compiled into a choice-free causal-net-shaped
/// system net, with the originating event recorded per transition.
#[derive(Debug, Clone)]
pub struct TraceNet {
    pub net: SystemNet,
    /// Source event of each transition (transitions biject with events).
    pub origin: Vec<EventId>,
    /// Source order edge of each internal place, if any.
    pub place_edge: Vec<Option<(EventId, EventId)>>,
}

/// Compiles a p-trace into its trace net: one transition per event, one
/// place per reduction edge, one entry place per minimal event and one
/// exit place per maximal event.
pub fn ptrace_to_trace_net(trace: &PTrace) -> TraceNet {
    let mut b = SystemNet::builder();
    let mut trans = Vec::with_capacity(trace.n_events());
    for e in trace.events() {
        let t = b.transition(
            &format!("t{}[{}]", e.0, trace.label(e)),
            Some(trace.label(e)),
        );
        trans.push(t);
        debug_assert_eq!(t.index(), e.index());
    }
    let mut place_edge = Vec::new();
    let mut init = Vec::new();
    let mut fin = Vec::new();
    for e in trace.minimal() {
        let p = b.place(&format!("in({})", e.0));
        b.arc_pt(p, trans[e.index()]);
        place_edge.push(None);
        init.push(p);
    }
    for &(u, v) in trace.order() {
        let p = b.place(&format!("d({u}->{v})"));
        b.arc_tp(trans[u as usize], p);
        b.arc_pt(p, trans[v as usize]);
        place_edge.push(Some((EventId(u), EventId(v))));
    }
    for e in trace.maximal() {
        let p = b.place(&format!("out({})", e.0));
        b.arc_tp(trans[e.index()], p);
        place_edge.push(None);
        fin.push(p);
    }
    b.initial(&init);
    b.final_marking(&fin);
    TraceNet {
        net: b.build(),
        origin: trace.events().collect(),
        place_edge,
    }
}

impl TraceNet {
    /// The event behind a trace-net transition.
    pub fn event_of(&self, t: TransId) -> EventId {
        self.origin[t.index()]
    }

    /// Which trace places connect events, versus entry/exit places.
    pub fn edge_of_place(&self, p: PlaceId) -> Option<(EventId, EventId)> {
        self.place_edge[p.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::Marking;
    use proptest::prelude::*;

    fn ev(activity: &str, start: i64, end: i64) -> RawEvent {
        RawEvent {
            case_id: "c1".into(),
            activity: activity.into(),
            start_ms: start,
            end_ms: end,
        }
    }

    #[test]
    fn disjoint_intervals_are_ordered() {
        let t = derive_ptrace(&[ev("a", 0, 1), ev("b", 2, 3)]).unwrap();
        assert_eq!(t.order(), &[(0, 1)]);
    }

    #[test]
    fn overlapping_intervals_are_concurrent() {
        let t = derive_ptrace(&[ev("a", 0, 5), ev("b", 3, 8)]).unwrap();
        assert!(t.order().is_empty());
    }

    #[test]
    fn shared_boundary_is_concurrent() {
        // end == start is not strictly less, so no edge.
        let t = derive_ptrace(&[ev("a", 0, 2), ev("b", 2, 3)]).unwrap();
        assert!(t.order().is_empty());
    }

    #[test]
    fn fan_out_order() {
        let t = derive_ptrace(&[ev("a", 0, 1), ev("b", 2, 3), ev("c", 2, 3)]).unwrap();
        assert_eq!(t.order(), &[(0, 1), (0, 2)]);
        assert!(!t.precedes(EventId(1), EventId(2)));
        assert!(!t.precedes(EventId(2), EventId(1)));
    }

    #[test]
    fn input_errors() {
        assert_eq!(derive_ptrace(&[]), Err(TraceError::EmptyInput));
        let mixed = [
            ev("a", 0, 1),
            RawEvent {
                case_id: "c2".into(),
                ..ev("b", 2, 3)
            },
        ];
        assert!(matches!(
            derive_ptrace(&mixed),
            Err(TraceError::MixedCaseIds(..))
        ));
        let neg = [ev("a", 5, 1)];
        assert!(matches!(
            derive_ptrace(&neg),
            Err(TraceError::NegativeDuration { .. })
        ));
    }

    #[test]
    fn reduction_is_stored_not_closure() {
        let t = derive_ptrace(&[ev("a", 0, 1), ev("b", 2, 3), ev("c", 4, 5)]).unwrap();
        assert_eq!(t.order(), &[(0, 1), (1, 2)]);
        assert_eq!(t.order_closure(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    proptest! {
        /// The stored order's closure equals the brute-force pairwise rule.
        #[test]
        fn derive_matches_pairwise_oracle(raw in proptest::collection::vec((0i64..20, 0i64..10), 1..7)) {
            let events: Vec<RawEvent> = raw
                .iter()
                .enumerate()
                .map(|(i, &(s, d))| ev(&format!("a{}", i % 3), s, s + d))
                .collect();
            let t = derive_ptrace(&events).unwrap();
            let closure = t.order_closure();
            for i in 0..events.len() as u32 {
                for j in 0..events.len() as u32 {
                    if i == j { continue; }
                    let oracle = events[i as usize].end_ms < events[j as usize].start_ms;
                    prop_assert_eq!(closure.contains(&(i, j)), oracle);
                }
            }
        }
    }

    #[test]
    fn single_event_trace_net() {
        let t = derive_ptrace(&[ev("a", 0, 1)]).unwrap();
        let tn = ptrace_to_trace_net(&t);
        assert_eq!(tn.net.n_transitions(), 1);
        assert_eq!(tn.net.n_places(), 2);
        assert_eq!(tn.net.m_init().len(), 1);
        assert_eq!(tn.net.m_final().len(), 1);
        assert!(tn.net.validate().is_empty());
    }

    #[test]
    fn concurrent_pair_gives_disjoint_chains() {
        let t = derive_ptrace(&[ev("a", 0, 5), ev("b", 0, 5)]).unwrap();
        let tn = ptrace_to_trace_net(&t);
        assert_eq!(tn.net.m_init().len(), 2);
        assert_eq!(tn.net.m_final().len(), 2);
        // Simulate: both orders fire to completion, 1-safely.
        let rg = tn.net.reachability(64).unwrap();
        assert!(rg.contains(tn.net.m_final()));
    }

    /// Firing sequences of the trace net, projected to labels, are exactly
    /// the linearizations of the p-trace.
    fn all_firing_label_seqs(net: &SystemNet) -> Vec<Vec<String>> {
        fn rec(net: &SystemNet, m: &Marking, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
            let en = net.enabled(m);
            if m == net.m_final() {
                out.push(cur.clone());
            }
            for t in en {
                let next = net.fire(m, t).unwrap();
                cur.push(net.label(t).unwrap().to_string());
                rec(net, &next, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(net, net.m_init(), &mut Vec::new(), &mut out);
        out.sort();
        out
    }

    fn all_linearizations(t: &PTrace) -> Vec<Vec<String>> {
        fn rec(t: &PTrace, done: &mut Vec<u32>, out: &mut Vec<Vec<String>>) {
            if done.len() == t.n_events() {
                out.push(
                    done.iter()
                        .map(|&e| t.label(EventId(e)).to_string())
                        .collect(),
                );
                return;
            }
            for e in 0..t.n_events() as u32 {
                if done.contains(&e) {
                    continue;
                }
                let ready = t
                    .order_closure()
                    .iter()
                    .filter(|&&(_, v)| v == e)
                    .all(|&(u, _)| done.contains(&u));
                if ready {
                    done.push(e);
                    rec(t, done, out);
                    done.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(t, &mut Vec::new(), &mut out);
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn trace_net_language_is_linearizations() {
        let cases = vec![
            vec![ev("a", 0, 1), ev("b", 2, 3), ev("c", 2, 3)],
            vec![ev("a", 0, 9), ev("b", 0, 9), ev("c", 10, 11)],
            vec![ev("a", 0, 1), ev("b", 2, 3), ev("a", 2, 3), ev("d", 5, 6)],
            vec![ev("x", 0, 1)],
        ];
        for events in cases {
            let t = derive_ptrace(&events).unwrap();
            let tn = ptrace_to_trace_net(&t);
            assert_eq!(all_firing_label_seqs(&tn.net), all_linearizations(&t));
        }
    }

    /// Round trip: the order induced by the trace net's unique maximal
    /// run (reachability between its transitions) is the trace's order.
    #[test]
    fn trace_net_round_trips_the_partial_order() {
        let cases = vec![
            vec![ev("a", 0, 1), ev("b", 2, 3), ev("c", 2, 3)],
            vec![ev("a", 0, 9), ev("b", 0, 9)],
            vec![ev("x", 0, 1), ev("x", 2, 3), ev("y", 2, 3), ev("z", 5, 6)],
        ];
        for events in cases {
            let t = derive_ptrace(&events).unwrap();
            let tn = ptrace_to_trace_net(&t);
            // Direct causality between transitions: shared intermediate place.
            let n = tn.net.n_transitions();
            let mut edges = Vec::new();
            for p in tn.net.places() {
                for &u in tn.net.producers(p) {
                    for &v in tn.net.consumers(p) {
                        edges.push((u.0, v.0));
                    }
                }
            }
            let induced = crate::dag::closure_edges(n, &edges);
            assert_eq!(
                induced,
                t.order_closure(),
                "trace-net order must mirror the trace"
            );
        }
    }

    #[test]
    fn fig5_trace_net_shape() {
        // Four events b, c, d, e with b before each of c, d, e.
        let t =
            derive_ptrace(&[ev("b", 0, 1), ev("c", 2, 3), ev("d", 2, 3), ev("e", 2, 3)]).unwrap();
        let tn = ptrace_to_trace_net(&t);
        assert_eq!(tn.net.n_transitions(), 4);
        // 1 entry + 3 dependency places + 3 exit places.
        assert_eq!(tn.net.n_places(), 7);
        assert_eq!(tn.net.m_init().len(), 1);
        assert_eq!(tn.net.m_final().len(), 3);
        // Occurrence-net shape: each place has at most one producer/consumer.
        for p in tn.net.places() {
            assert!(tn.net.producers(p).len() <= 1);
            assert!(tn.net.consumers(p).len() <= 1);
        }
    }
}
