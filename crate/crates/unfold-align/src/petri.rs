//! Labeled 1-safe Petri nets with firing semantics and structural queries.
//!
//! Nets are immutable after construction. Places and transitions carry
//! dense integer ids assigned at build time; activity labels are interned
//! `Arc<str>` values, with `None` standing for the silent label τ.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;
use thiserror::Error;

/// Dense place id within one net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub u32);

/// Dense transition id within one net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransId(pub u32);

impl PlaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TransId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Either node kind, for structural queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    Place(PlaceId),
    Trans(TransId),
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("transition {0} is not enabled")]
    NotEnabled(String),
    #[error("firing {transition} would put a second token on place {place}")]
    UnsafeMarking { transition: String, place: String },
    #[error("reachability exploration exceeded {0} markings")]
    ReachabilityLimit(usize),
}

/// A set of marked places (multiplicity 1 everywhere, by 1-safeness).
///
/// Stored as a sorted, deduplicated id vector so equality, hashing and
/// canonical keys are cheap.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Marking(Vec<PlaceId>);

impl Marking {
    pub fn new(mut places: Vec<PlaceId>) -> Self {
        places.sort_unstable();
        places.dedup();
        Marking(places)
    }

    pub fn contains(&self, p: PlaceId) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = PlaceId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[PlaceId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<PlaceId> for Marking {
    fn from_iter<I: IntoIterator<Item = PlaceId>>(iter: I) -> Self {
        Marking::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone)]
struct Transition {
    name: String,
    label: Option<Arc<str>>,
    pre: Vec<PlaceId>,
    post: Vec<PlaceId>,
}

/// Structural defects reported by [`SystemNet::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoPlaces,
    TransitionNoInput { transition: String },
    TransitionNoOutput { transition: String },
    UnknownPlace { context: String, place: u32 },
    EmptyInitialMarking,
}

/// A labeled Petri net together with its initial and final markings.
#[derive(Debug, Clone)]
pub struct SystemNet {
    place_names: Vec<String>,
    transitions: Vec<Transition>,
    /// Transitions consuming from each place.
    place_consumers: Vec<Vec<TransId>>,
    /// Transitions producing into each place.
    place_producers: Vec<Vec<TransId>>,
    m_init: Marking,
    m_final: Marking,
}

impl SystemNet {
    pub fn builder() -> NetBuilder {
        NetBuilder::default()
    }

    pub fn n_places(&self) -> usize {
        self.place_names.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.place_names.len() as u32).map(PlaceId)
    }

    pub fn transitions(&self) -> impl Iterator<Item = TransId> {
        (0..self.transitions.len() as u32).map(TransId)
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.place_names[p.index()]
    }

    pub fn trans_name(&self, t: TransId) -> &str {
        &self.transitions[t.index()].name
    }

    /// Activity label of a transition; `None` is the silent label τ.
    pub fn label(&self, t: TransId) -> Option<&Arc<str>> {
        self.transitions[t.index()].label.as_ref()
    }

    pub fn is_silent(&self, t: TransId) -> bool {
        self.transitions[t.index()].label.is_none()
    }

    pub fn m_init(&self) -> &Marking {
        &self.m_init
    }

    pub fn m_final(&self) -> &Marking {
        &self.m_final
    }

    /// Input places of a transition (sorted).
    pub fn pre_t(&self, t: TransId) -> &[PlaceId] {
        &self.transitions[t.index()].pre
    }

    /// Output places of a transition (sorted).
    pub fn post_t(&self, t: TransId) -> &[PlaceId] {
        &self.transitions[t.index()].post
    }

    pub fn consumers(&self, p: PlaceId) -> &[TransId] {
        &self.place_consumers[p.index()]
    }

    pub fn producers(&self, p: PlaceId) -> &[TransId] {
        &self.place_producers[p.index()]
    }

    /// Preset of an arbitrary node: all nodes with an arc into it.
    pub fn preset(&self, x: NodeRef) -> Result<Vec<NodeRef>, NetError> {
        match x {
            NodeRef::Place(p) => {
                self.check_place(p)?;
                Ok(self
                    .producers(p)
                    .iter()
                    .map(|&t| NodeRef::Trans(t))
                    .collect())
            }
            NodeRef::Trans(t) => {
                self.check_trans(t)?;
                Ok(self.pre_t(t).iter().map(|&p| NodeRef::Place(p)).collect())
            }
        }
    }

    /// Postset of an arbitrary node: all nodes it has an arc into.
    pub fn postset(&self, x: NodeRef) -> Result<Vec<NodeRef>, NetError> {
        match x {
            NodeRef::Place(p) => {
                self.check_place(p)?;
                Ok(self
                    .consumers(p)
                    .iter()
                    .map(|&t| NodeRef::Trans(t))
                    .collect())
            }
            NodeRef::Trans(t) => {
                self.check_trans(t)?;
                Ok(self.post_t(t).iter().map(|&p| NodeRef::Place(p)).collect())
            }
        }
    }

    fn check_place(&self, p: PlaceId) -> Result<(), NetError> {
        if p.index() < self.n_places() {
            Ok(())
        } else {
            Err(NetError::UnknownNode(format!("place #{}", p.0)))
        }
    }

    fn check_trans(&self, t: TransId) -> Result<(), NetError> {
        if t.index() < self.n_transitions() {
            Ok(())
        } else {
            Err(NetError::UnknownNode(format!("transition #{}", t.0)))
        }
    }

    pub fn is_enabled(&self, m: &Marking, t: TransId) -> bool {
        self.pre_t(t).iter().all(|&p| m.contains(p))
    }

    /// All transitions enabled at `m`.
    pub fn enabled(&self, m: &Marking) -> Vec<TransId> {
        self.transitions()
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    /// Fires `t` at `m`. Errors if `t` is not enabled or the successor
    /// marking would put two tokens on one place.
    pub fn fire(&self, m: &Marking, t: TransId) -> Result<Marking, NetError> {
        self.check_trans(t)?;
        if !self.is_enabled(m, t) {
            return Err(NetError::NotEnabled(self.trans_name(t).to_string()));
        }
        let pre = self.pre_t(t);
        let mut next: Vec<PlaceId> = m.iter().filter(|p| !pre.contains(p)).collect();
        for &p in self.post_t(t) {
            if next.contains(&p) {
                return Err(NetError::UnsafeMarking {
                    transition: self.trans_name(t).to_string(),
                    place: self.place_name(p).to_string(),
                });
            }
            next.push(p);
        }
        Ok(Marking::new(next))
    }

    /// Checks the structural invariants; an empty list means well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.place_names.is_empty() {
            out.push(Violation::NoPlaces);
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.pre.is_empty() {
                out.push(Violation::TransitionNoInput {
                    transition: t.name.clone(),
                });
            }
            if t.post.is_empty() {
                out.push(Violation::TransitionNoOutput {
                    transition: t.name.clone(),
                });
            }
            let _ = i;
        }
        let n = self.n_places() as u32;
        for (ctx, m) in [("m_init", &self.m_init), ("m_final", &self.m_final)] {
            for p in m.iter() {
                if p.0 >= n {
                    out.push(Violation::UnknownPlace {
                        context: ctx.to_string(),
                        place: p.0,
                    });
                }
            }
        }
        if self.m_init.is_empty() {
            out.push(Violation::EmptyInitialMarking);
        }
        out
    }

    /// Breadth-first exploration of all markings reachable from `m_init`,
    /// with the firing edges between them. Errors if a firing violates
    /// 1-safeness or the state count exceeds `limit`.
    pub fn reachability(&self, limit: usize) -> Result<ReachabilityGraph, NetError> {
        let mut index: HashMap<Marking, usize> = HashMap::new();
        let mut markings = vec![self.m_init.clone()];
        index.insert(self.m_init.clone(), 0);
        let mut edges: Vec<Vec<(TransId, usize)>> = vec![Vec::new()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let m = markings[i].clone();
            for t in self.enabled(&m) {
                let next = self.fire(&m, t)?;
                let j = match index.get(&next) {
                    Some(&j) => j,
                    None => {
                        let j = markings.len();
                        if j >= limit {
                            return Err(NetError::ReachabilityLimit(limit));
                        }
                        markings.push(next.clone());
                        index.insert(next, j);
                        edges.push(Vec::new());
                        queue.push_back(j);
                        j
                    }
                };
                edges[i].push((t, j));
            }
        }
        Ok(ReachabilityGraph {
            markings,
            index,
            edges,
        })
    }
}

/// Explicit reachability graph; the interleaving-semantics state space.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    pub markings: Vec<Marking>,
    pub index: HashMap<Marking, usize>,
    pub edges: Vec<Vec<(TransId, usize)>>,
}

impl ReachabilityGraph {
    pub fn contains(&self, m: &Marking) -> bool {
        self.index.contains_key(m)
    }
}

/// Incremental construction of a [`SystemNet`].
#[derive(Default)]
pub struct NetBuilder {
    place_names: Vec<String>,
    place_index: HashMap<String, PlaceId>,
    transitions: Vec<Transition>,
    trans_index: HashMap<String, TransId>,
    arcs: HashSet<(NodeRef, NodeRef)>,
    m_init: Vec<PlaceId>,
    m_final: Vec<PlaceId>,
    labels: HashMap<String, Arc<str>>,
}

impl NetBuilder {
    /// Adds (or retrieves) a place by name.
    pub fn place(&mut self, name: &str) -> PlaceId {
        if let Some(&p) = self.place_index.get(name) {
            return p;
        }
        let p = PlaceId(self.place_names.len() as u32);
        self.place_names.push(name.to_string());
        self.place_index.insert(name.to_string(), p);
        p
    }

    /// Adds a transition with an optional activity label (`None` = τ).
    pub fn transition(&mut self, name: &str, label: Option<&str>) -> TransId {
        if let Some(&t) = self.trans_index.get(name) {
            return t;
        }
        let label = label.map(|l| {
            self.labels
                .entry(l.to_string())
                .or_insert_with(|| Arc::from(l))
                .clone()
        });
        let t = TransId(self.transitions.len() as u32);
        self.transitions.push(Transition {
            name: name.to_string(),
            label,
            pre: Vec::new(),
            post: Vec::new(),
        });
        self.trans_index.insert(name.to_string(), t);
        t
    }

    pub fn arc_pt(&mut self, p: PlaceId, t: TransId) -> &mut Self {
        if self.arcs.insert((NodeRef::Place(p), NodeRef::Trans(t))) {
            self.transitions[t.index()].pre.push(p);
        }
        self
    }

    pub fn arc_tp(&mut self, t: TransId, p: PlaceId) -> &mut Self {
        if self.arcs.insert((NodeRef::Trans(t), NodeRef::Place(p))) {
            self.transitions[t.index()].post.push(p);
        }
        self
    }

    pub fn initial(&mut self, places: &[PlaceId]) -> &mut Self {
        self.m_init.extend_from_slice(places);
        self
    }

    pub fn final_marking(&mut self, places: &[PlaceId]) -> &mut Self {
        self.m_final.extend_from_slice(places);
        self
    }

    /// Marks places by raw id, bypassing name lookup. Lets tests build
    /// nets whose markings reference unknown places.
    pub fn initial_raw(&mut self, ids: &[u32]) -> &mut Self {
        self.m_init.extend(ids.iter().map(|&i| PlaceId(i)));
        self
    }

    pub fn build(self) -> SystemNet {
        let n = self.place_names.len();
        let mut place_consumers = vec![Vec::new(); n];
        let mut place_producers = vec![Vec::new(); n];
        let mut transitions = self.transitions;
        for (i, t) in transitions.iter_mut().enumerate() {
            t.pre.sort_unstable();
            t.pre.dedup();
            t.post.sort_unstable();
            t.post.dedup();
            for &p in &t.pre {
                if p.index() < n {
                    place_consumers[p.index()].push(TransId(i as u32));
                }
            }
            for &p in &t.post {
                if p.index() < n {
                    place_producers[p.index()].push(TransId(i as u32));
                }
            }
        }
        SystemNet {
            place_names: self.place_names,
            transitions,
            place_consumers,
            place_producers,
            m_init: Marking::new(self.m_init),
            m_final: Marking::new(self.m_final),
        }
    }
}

/// Shorthand for wiring small nets in tests and fixtures: transitions are
/// given as `(name, label, pre-places, post-places)`.
pub fn quick_net(
    places: &[&str],
    transitions: &[(&str, Option<&str>, &[&str], &[&str])],
    m_init: &[&str],
    m_final: &[&str],
) -> SystemNet {
    let mut b = SystemNet::builder();
    for p in places {
        b.place(p);
    }
    for (name, label, pre, post) in transitions {
        let t = b.transition(name, *label);
        for p in *pre {
            let p = b.place(p);
            b.arc_pt(p, t);
        }
        for p in *post {
            let p = b.place(p);
            b.arc_tp(t, p);
        }
    }
    let init: Vec<PlaceId> = m_init.iter().map(|p| b.place(p)).collect();
    let fin: Vec<PlaceId> = m_final.iter().map(|p| b.place(p)).collect();
    b.initial(&init);
    b.final_marking(&fin);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn chain() -> SystemNet {
        quick_net(
            &["p", "q"],
            &[("t", Some("a"), &["p"], &["q"])],
            &["p"],
            &["q"],
        )
    }

    #[test]
    fn preset_postset_on_chain() {
        let net = chain();
        let p = PlaceId(0);
        let q = PlaceId(1);
        let t = TransId(0);
        assert_eq!(
            net.preset(NodeRef::Trans(t)).unwrap(),
            vec![NodeRef::Place(p)]
        );
        assert_eq!(
            net.preset(NodeRef::Place(q)).unwrap(),
            vec![NodeRef::Trans(t)]
        );
        assert_eq!(net.postset(NodeRef::Place(q)).unwrap(), vec![]);
        assert!(net.preset(NodeRef::Place(PlaceId(9))).is_err());
    }

    #[test]
    fn preset_of_isolated_place_is_empty() {
        let net = quick_net(&["p"], &[], &["p"], &["p"]);
        assert_eq!(net.preset(NodeRef::Place(PlaceId(0))).unwrap(), vec![]);
    }

    #[test]
    fn enabled_and_fire_on_chain() {
        let net = chain();
        let m0 = net.m_init().clone();
        assert_eq!(net.enabled(&m0), vec![TransId(0)]);
        let m1 = net.fire(&m0, TransId(0)).unwrap();
        assert_eq!(m1, Marking::new(vec![PlaceId(1)]));
        assert!(net.enabled(&m1).is_empty());
        assert!(matches!(
            net.fire(&m1, TransId(0)),
            Err(NetError::NotEnabled(_))
        ));
    }

    #[test]
    fn fig2_net_enabled_and_final_marking() {
        // Net with m_init = {a,b,c}: x and y are both enabled; both
        // interleavings end in {c,d,e}.
        let net = fixtures::fig2_net();
        let m0 = net.m_init().clone();
        let names: Vec<&str> = net
            .enabled(&m0)
            .iter()
            .map(|&t| net.trans_name(t))
            .collect();
        assert_eq!(names, vec!["x", "y"]);
        let x = TransId(0);
        let y = TransId(1);
        let via_x = net.fire(&net.fire(&m0, x).unwrap(), y).unwrap();
        let via_y = net.fire(&net.fire(&m0, y).unwrap(), x).unwrap();
        assert_eq!(via_x, *net.m_final());
        assert_eq!(via_y, *net.m_final());
    }

    #[test]
    fn unsafe_firing_is_an_error() {
        // t2's output place q is already marked after t1 keeps its token.
        let net = quick_net(
            &["p", "q"],
            &[
                ("t", Some("a"), &["p"], &["p", "q"]),
                ("u", Some("b"), &["p"], &["q"]),
            ],
            &["p"],
            &["q"],
        );
        let m1 = net.fire(net.m_init(), TransId(0)).unwrap(); // {p, q}
        match net.fire(&m1, TransId(1)) {
            Err(NetError::UnsafeMarking { place, .. }) => assert_eq!(place, "q"),
            other => panic!("expected UnsafeMarking, got {other:?}"),
        }
    }

    #[test]
    fn validate_reports_violations() {
        let net = fixtures::fig1_mgmt_net();
        assert_eq!(net.n_places(), 11);
        assert_eq!(net.n_transitions(), 12);
        assert!(net.validate().is_empty());

        let mut b = SystemNet::builder();
        b.place("p");
        b.transition("dangling", Some("a"));
        b.initial_raw(&[7]);
        let bad = b.build();
        let v = bad.validate();
        assert!(v.contains(&Violation::TransitionNoInput {
            transition: "dangling".into()
        }));
        assert!(v.contains(&Violation::TransitionNoOutput {
            transition: "dangling".into()
        }));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::UnknownPlace { place: 7, .. })));
    }

    #[test]
    fn fire_is_deterministic() {
        let net = fixtures::fig2_net();
        let m0 = net.m_init().clone();
        let a = net.fire(&m0, TransId(0)).unwrap();
        let b = net.fire(&m0, TransId(0)).unwrap();
        assert_eq!(a, b);
    }

    /// Brute-force agreement: replaying every reachability edge agrees
    /// with `enabled`/`fire`, and reachable markings stay 1-safe sets.
    #[test]
    fn reachability_oracle_agreement() {
        for net in [fixtures::fig2_net(), fixtures::fig1_mgmt_net()] {
            let rg = net.reachability(10_000).unwrap();
            for (i, m) in rg.markings.iter().enumerate() {
                let enabled = net.enabled(m);
                let via_edges: Vec<TransId> = rg.edges[i].iter().map(|&(t, _)| t).collect();
                assert_eq!(enabled, via_edges);
                for &(t, j) in &rg.edges[i] {
                    assert_eq!(net.fire(m, t).unwrap(), rg.markings[j]);
                }
            }
        }
    }
}
