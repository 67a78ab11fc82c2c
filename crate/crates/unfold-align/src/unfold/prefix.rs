//! The branching-process prefix under construction: conditions, events,
//! the concurrency relation, configurations and possible extensions.
//!
//! Conditions and events live in append-only arenas; event ids double as
//! insertion ranks, which is exactly the total order the queue keys use
//! as their final tie-breaker. Each condition keeps a bit row of the
//! conditions concurrent with it, maintained incrementally as events are
//! appended, so co-set queries during extension enumeration are O(1) per
//! pair.

use super::heuristic::Bound;
use crate::petri::{Marking, PlaceId, SystemNet, TransId};
use crate::scalar::CostValue;
use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

/// Condition (place occurrence) id within the prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CondId(pub u32);

/// Event (transition occurrence) id within the prefix; doubles as the
/// insertion rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvId(pub u32);

impl CondId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EvId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Lifecycle of an event node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventState {
    /// Created as a possible extension, waiting in the queue.
    Queued,
    /// Popped and extended with its postset conditions.
    Appended,
    /// Appended, but its marking was already represented: not extended.
    Cutoff,
    /// Popped while its past contained a cut-off event: dropped.
    Discarded,
}

#[derive(Debug, Clone)]
pub struct Condition {
    pub place: PlaceId,
    /// Producing event; `None` for initial conditions.
    pub producer: Option<EvId>,
}

#[derive(Debug, Clone)]
pub struct EventNode<C> {
    pub transition: TransId,
    pub preset: Vec<CondId>,
    pub postset: Vec<CondId>,
    pub state: EventState,
    /// The local configuration `[e]`, as sorted event ids.
    pub config: Arc<[u32]>,
    /// Cost of this event's transition alone.
    pub own_cost: C,
    /// Total cost of the local configuration.
    pub cost: C,
    /// Marking induced by the local configuration.
    pub mark: Marking,
    /// Cached heuristic value at `mark` (zero under the cost order).
    pub est: Bound<C>,
}

#[derive(Debug, Error)]
pub enum PrefixError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("the product is not 1-safe: two tokens on place #{0}")]
    UnsafeProduct(u32),
}

/// Pairwise concurrency between conditions, as one growable bit row per
/// condition.
#[derive(Debug, Default, Clone)]
struct CoMatrix {
    rows: Vec<Vec<u64>>,
}

impl CoMatrix {
    fn add_node(&mut self) -> usize {
        self.rows.push(Vec::new());
        self.rows.len() - 1
    }

    fn get(&self, a: usize, b: usize) -> bool {
        let row = &self.rows[a];
        let w = b / 64;
        w < row.len() && row[w] & (1 << (b % 64)) != 0
    }

    fn set_sym(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            let row = &mut self.rows[x];
            let w = y / 64;
            if row.len() <= w {
                row.resize(w + 1, 0);
            }
            row[w] |= 1 << (y % 64);
        }
    }

    /// Bitwise AND of the given rows: conditions concurrent with all of
    /// them.
    fn and_rows(&self, ids: &[CondId]) -> Vec<u64> {
        let mut acc: Option<Vec<u64>> = None;
        for &c in ids {
            let row = &self.rows[c.index()];
            match &mut acc {
                None => acc = Some(row.clone()),
                Some(a) => {
                    a.truncate(row.len());
                    for (w, v) in a.iter_mut().zip(row.iter()) {
                        *w &= v;
                    }
                }
            }
        }
        acc.unwrap_or_default()
    }
}

fn word_clear(words: &mut [u64], i: usize) {
    let w = i / 64;
    if w < words.len() {
        words[w] &= !(1 << (i % 64));
    }
}

/// A finite configuration: causally closed, conflict-free event set with
/// its cached cost. The sorted id vector is also the `φ` key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration<C> {
    events: Arc<[u32]>,
    cost: C,
}

impl<C: CostValue> Configuration<C> {
    pub fn events(&self) -> &[u32] {
        &self.events
    }

    pub fn events_arc(&self) -> Arc<[u32]> {
        self.events.clone()
    }

    pub fn cost(&self) -> &C {
        &self.cost
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, e: EvId) -> bool {
        self.events.binary_search(&e.0).is_ok()
    }

    /// Strict subset test against another configuration.
    pub fn is_strict_subset_of(&self, other: &Self) -> bool {
        self.events.len() < other.events.len()
            && self
                .events
                .iter()
                .all(|e| other.events.binary_search(e).is_ok())
    }

    #[doc(hidden)]
    pub fn for_tests(events: &[u32], cost: C) -> Self {
        Configuration {
            events: events.into(),
            cost,
        }
    }
}

/// The prefix arena.
#[derive(Debug, Clone)]
pub struct Prefix<C> {
    conditions: Vec<Condition>,
    events: Vec<EventNode<C>>,
    co: CoMatrix,
    /// Conditions per mapped place.
    by_place: Vec<Vec<CondId>>,
    initial: Vec<CondId>,
}

impl<C: CostValue> Prefix<C> {
    /// Starts a prefix with one condition per initially marked place.
    pub fn new(net: &SystemNet) -> Self {
        let mut prefix = Prefix {
            conditions: Vec::new(),
            events: Vec::new(),
            co: CoMatrix::default(),
            by_place: vec![Vec::new(); net.n_places()],
            initial: Vec::new(),
        };
        let init: Vec<CondId> = net
            .m_init()
            .iter()
            .map(|p| prefix.push_condition(p, None))
            .collect();
        // Initial conditions are pairwise concurrent.
        for (i, &a) in init.iter().enumerate() {
            for &b in &init[i + 1..] {
                prefix.co.set_sym(a.index(), b.index());
            }
        }
        prefix.initial = init;
        prefix
    }

    fn push_condition(&mut self, place: PlaceId, producer: Option<EvId>) -> CondId {
        let id = CondId(self.conditions.len() as u32);
        self.conditions.push(Condition { place, producer });
        let co_id = self.co.add_node();
        debug_assert_eq!(co_id, id.index());
        self.by_place[place.index()].push(id);
        id
    }

    pub fn n_conditions(&self) -> usize {
        self.conditions.len()
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn condition(&self, c: CondId) -> &Condition {
        &self.conditions[c.index()]
    }

    pub fn event(&self, e: EvId) -> &EventNode<C> {
        &self.events[e.index()]
    }

    pub fn events_iter(&self) -> impl Iterator<Item = (EvId, &EventNode<C>)> {
        self.events
            .iter()
            .enumerate()
            .map(|(i, ev)| (EvId(i as u32), ev))
    }

    pub fn initial_conditions(&self) -> &[CondId] {
        &self.initial
    }

    pub fn concurrent(&self, a: CondId, b: CondId) -> bool {
        self.co.get(a.index(), b.index())
    }

    pub fn set_est(&mut self, e: EvId, est: Bound<C>) {
        self.events[e.index()].est = est;
    }

    pub fn set_state(&mut self, e: EvId, state: EventState) {
        self.events[e.index()].state = state;
    }

    /// Creates a queued event node for transition `t` with the given
    /// co-set as preset. Computes its local configuration, cost and
    /// induced marking. `costs` maps transition ids to move costs.
    pub fn create_event(
        &mut self,
        net: &SystemNet,
        t: TransId,
        preset: Vec<CondId>,
        costs: &[C],
    ) -> Result<EvId, PrefixError> {
        let id = EvId(self.events.len() as u32);
        // Merge the producers' local configurations and add the new event.
        let mut config: Vec<u32> = Vec::new();
        for &c in &preset {
            if let Some(p) = self.conditions[c.index()].producer {
                let pc = &self.events[p.index()].config;
                let mut merged = Vec::with_capacity(config.len() + pc.len());
                let (mut i, mut j) = (0, 0);
                while i < config.len() || j < pc.len() {
                    match (config.get(i), pc.get(j)) {
                        (Some(&a), Some(&b)) if a == b => {
                            merged.push(a);
                            i += 1;
                            j += 1;
                        }
                        (Some(&a), Some(&b)) if a < b => {
                            merged.push(a);
                            i += 1;
                        }
                        (Some(_), Some(&b)) => {
                            merged.push(b);
                            j += 1;
                        }
                        (Some(&a), None) => {
                            merged.push(a);
                            i += 1;
                        }
                        (None, Some(&b)) => {
                            merged.push(b);
                            j += 1;
                        }
                        (None, None) => unreachable!(),
                    }
                }
                config = merged;
            }
        }
        config.push(id.0);
        let cost: C = config
            .iter()
            .map(|&e| {
                let t = if e == id.0 {
                    t
                } else {
                    self.events[e as usize].transition
                };
                costs[t.index()].clone()
            })
            .sum();
        let mark = self.candidate_mark(net, &config, id, t, &preset)?;
        self.events.push(EventNode {
            transition: t,
            preset,
            postset: Vec::new(),
            state: EventState::Queued,
            config: config.into(),
            own_cost: costs[t.index()].clone(),
            cost,
            mark,
            est: Bound::zero(),
        });
        Ok(id)
    }

    /// Marking induced by the local configuration of a queued candidate:
    /// the cut of its ancestors, minus what it consumes, plus the places
    /// its transition produces.
    fn candidate_mark(
        &self,
        net: &SystemNet,
        config: &[u32],
        own_id: EvId,
        t: TransId,
        preset: &[CondId],
    ) -> Result<Marking, PrefixError> {
        let mut consumed: HashSet<CondId> = preset.iter().copied().collect();
        let mut produced: Vec<CondId> = self.initial.clone();
        for &e in config {
            if e == own_id.0 {
                continue;
            }
            let node = &self.events[e as usize];
            consumed.extend(node.preset.iter().copied());
            produced.extend(node.postset.iter().copied());
        }
        let mut places: Vec<PlaceId> = produced
            .into_iter()
            .filter(|c| !consumed.contains(c))
            .map(|c| self.conditions[c.index()].place)
            .collect();
        places.extend_from_slice(net.post_t(t));
        places.sort_unstable();
        if let Some(w) = places.windows(2).find(|w| w[0] == w[1]) {
            return Err(PrefixError::UnsafeProduct(w[0].0));
        }
        Ok(Marking::new(places))
    }

    /// Materializes the postset conditions of a popped event and updates
    /// the concurrency relation. Returns the new conditions.
    pub fn append_event(&mut self, net: &SystemNet, e: EvId) -> Vec<CondId> {
        let (t, preset) = {
            let node = &self.events[e.index()];
            debug_assert_eq!(node.state, EventState::Queued);
            (node.transition, node.preset.clone())
        };
        // Conditions concurrent with the whole preset stay concurrent
        // with the new postset; the consumed preset itself does not.
        let mut base = self.co.and_rows(&preset);
        for &c in &preset {
            word_clear(&mut base, c.index());
        }
        let new: Vec<CondId> = net
            .post_t(t)
            .iter()
            .map(|&p| self.push_condition(p, Some(e)))
            .collect();
        for (i, &s) in new.iter().enumerate() {
            for &other in &new[i + 1..] {
                self.co.set_sym(s.index(), other.index());
            }
            for w in 0..base.len() {
                let mut bits = base[w];
                while bits != 0 {
                    let b = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    self.co.set_sym(s.index(), b);
                }
            }
        }
        self.events[e.index()].postset = new.clone();
        self.events[e.index()].state = EventState::Appended;
        new
    }

    /// All new possible extensions: pairs `(t, X)` where `X` is a
    /// pairwise-concurrent condition set matching `•t` and containing at
    /// least one of `new` (each extension is discovered exactly once, in
    /// the call where its newest condition appeared).
    pub fn possible_extensions(
        &self,
        net: &SystemNet,
        new: &[CondId],
    ) -> Vec<(TransId, Vec<CondId>)> {
        let newset: HashSet<CondId> = new.iter().copied().collect();
        let mut out = Vec::new();
        for &anchor in new {
            let p = self.conditions[anchor.index()].place;
            for &t in net.consumers(p) {
                let pre = net.pre_t(t);
                let mut chosen = vec![anchor];
                let rest: Vec<PlaceId> = pre.iter().copied().filter(|&q| q != p).collect();
                self.fill_coset(net, t, &rest, 0, anchor, &newset, &mut chosen, &mut out);
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn fill_coset(
        &self,
        net: &SystemNet,
        t: TransId,
        rest: &[PlaceId],
        depth: usize,
        anchor: CondId,
        newset: &HashSet<CondId>,
        chosen: &mut Vec<CondId>,
        out: &mut Vec<(TransId, Vec<CondId>)>,
    ) {
        if depth == rest.len() {
            let mut preset = chosen.clone();
            preset.sort_unstable();
            out.push((t, preset));
            return;
        }
        for &cand in &self.by_place[rest[depth].index()] {
            // The anchor must be the smallest new condition in the set.
            if newset.contains(&cand) && cand < anchor {
                continue;
            }
            if !chosen.iter().all(|&c| self.concurrent(c, cand)) {
                continue;
            }
            chosen.push(cand);
            self.fill_coset(net, t, rest, depth + 1, anchor, newset, chosen, out);
            chosen.pop();
        }
    }

    /// The local configuration of an event, from its cache.
    pub fn local_configuration(&self, e: EvId) -> Configuration<C> {
        let node = &self.events[e.index()];
        Configuration {
            events: node.config.clone(),
            cost: node.cost.clone(),
        }
    }

    /// Builds and validates a configuration from an explicit event set:
    /// all events materialized, causally closed and conflict-free.
    pub fn configuration(&self, events: &[EvId]) -> Result<Configuration<C>, PrefixError> {
        let mut ids: Vec<u32> = events.iter().map(|e| e.0).collect();
        ids.sort_unstable();
        ids.dedup();
        let inside = |x: u32| ids.binary_search(&x).is_ok();
        let mut preset_seen: HashSet<CondId> = HashSet::new();
        let mut cost = C::zero();
        for &e in &ids {
            let node = self
                .events
                .get(e as usize)
                .ok_or_else(|| PrefixError::InvalidConfiguration(format!("unknown event {e}")))?;
            if matches!(node.state, EventState::Queued | EventState::Discarded) {
                return Err(PrefixError::InvalidConfiguration(format!(
                    "event {e} is not part of the built prefix"
                )));
            }
            if !node.config.iter().all(|&a| inside(a)) {
                return Err(PrefixError::InvalidConfiguration(format!(
                    "not causally closed at event {e}"
                )));
            }
            for &c in &node.preset {
                if !preset_seen.insert(c) {
                    return Err(PrefixError::InvalidConfiguration(format!(
                        "conflict: condition {} consumed twice",
                        c.0
                    )));
                }
            }
            cost = cost + self.events[e as usize].own_cost.clone();
        }
        Ok(Configuration {
            events: ids.into(),
            cost,
        })
    }

    /// Marking induced by a configuration of materialized events.
    pub fn mark_of(&self, cfg: &Configuration<C>) -> Result<Marking, PrefixError> {
        let mut consumed: HashSet<CondId> = HashSet::new();
        let mut produced: Vec<CondId> = self.initial.clone();
        for &e in cfg.events() {
            let node = self
                .events
                .get(e as usize)
                .ok_or_else(|| PrefixError::InvalidConfiguration(format!("unknown event {e}")))?;
            if matches!(node.state, EventState::Queued | EventState::Discarded) {
                return Err(PrefixError::InvalidConfiguration(format!(
                    "event {e} has no materialized postset"
                )));
            }
            consumed.extend(node.preset.iter().copied());
            produced.extend(node.postset.iter().copied());
        }
        let places: Vec<PlaceId> = produced
            .into_iter()
            .filter(|c| !consumed.contains(c))
            .map(|c| self.conditions[c.index()].place)
            .collect();
        let marking = Marking::new(places.clone());
        if marking.len() != places.len() {
            return Err(PrefixError::UnsafeProduct(
                places.iter().max().map(|p| p.0).unwrap_or(0),
            ));
        }
        Ok(marking)
    }

    /// All markings reachable by replaying the materialized prefix as an
    /// occurrence net (breadth-first over cuts). Independent of the
    /// `mark` fields cached on events.
    pub fn reachable_cut_markings(&self) -> HashSet<Marking> {
        let mut seen_states: HashSet<Vec<CondId>> = HashSet::new();
        let mut out = HashSet::new();
        let mut start = self.initial.clone();
        start.sort_unstable();
        let mut queue = VecDeque::from([start.clone()]);
        seen_states.insert(start);
        while let Some(state) = queue.pop_front() {
            out.insert(Marking::new(
                state
                    .iter()
                    .map(|c| self.conditions[c.index()].place)
                    .collect(),
            ));
            for node in &self.events {
                if matches!(node.state, EventState::Queued | EventState::Discarded) {
                    continue;
                }
                if !node.preset.iter().all(|c| state.binary_search(c).is_ok()) {
                    continue;
                }
                let mut next: Vec<CondId> = state
                    .iter()
                    .copied()
                    .filter(|c| !node.preset.contains(c))
                    .collect();
                next.extend(node.postset.iter().copied());
                next.sort_unstable();
                if seen_states.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        out
    }

    /// DOT rendering of the prefix; cut-off events are dashed, queued
    /// candidates are omitted.
    pub fn to_dot(&self, net: &SystemNet) -> String {
        let mut s = String::from("digraph prefix {\n  rankdir=LR;\n");
        for (i, c) in self.conditions.iter().enumerate() {
            let _ = writeln!(
                s,
                "  c{i} [shape=circle label=\"c{i}:{}\"];",
                net.place_name(c.place)
            );
        }
        for (i, e) in self.events.iter().enumerate() {
            let (style, suffix) = match e.state {
                EventState::Cutoff => ("dashed", " [cutoff]"),
                EventState::Appended => ("solid", ""),
                _ => continue,
            };
            let _ = writeln!(
                s,
                "  e{i} [shape=box style={style} label=\"e{i}:{}{}\"];",
                net.trans_name(e.transition),
                suffix
            );
            for c in &e.preset {
                let _ = writeln!(s, "  c{} -> e{i};", c.0);
            }
            for c in &e.postset {
                let _ = writeln!(s, "  e{i} -> c{};", c.0);
            }
        }
        s.push_str("}\n");
        s
    }

    /// JSON dump of the prefix structure.
    pub fn to_json(&self, net: &SystemNet) -> serde_json::Value {
        let conditions: Vec<serde_json::Value> = self
            .conditions
            .iter()
            .enumerate()
            .map(|(i, c)| {
                serde_json::json!({
                    "id": i,
                    "place": net.place_name(c.place),
                    "producer": c.producer.map(|e| e.0),
                })
            })
            .collect();
        let events: Vec<serde_json::Value> = self
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| !matches!(e.state, EventState::Queued | EventState::Discarded))
            .map(|(i, e)| {
                serde_json::json!({
                    "id": i,
                    "transition": net.trans_name(e.transition),
                    "preset": e.preset.iter().map(|c| c.0).collect::<Vec<_>>(),
                    "postset": e.postset.iter().map(|c| c.0).collect::<Vec<_>>(),
                    "cutoff": e.state == EventState::Cutoff,
                    "cost": e.cost.to_string(),
                })
            })
            .collect();
        serde_json::json!({ "conditions": conditions, "events": events })
    }
}
