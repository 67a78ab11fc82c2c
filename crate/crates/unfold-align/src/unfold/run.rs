//! Alignment runs: complete distributed runs of the extended product net
//! ending in the target event, extracted from a finished prefix.

use super::prefix::{EvId, EventState, Prefix};
use crate::petri::{Marking, PlaceId, TransId};
use crate::product::{Move, MoveNet, PlaceSide};
use crate::scalar::CostValue;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("run has {0} sink conditions, expected the single target condition")]
    NotSingleSink(usize),
    #[error("condition {0} is consumed twice within the run")]
    DoubleConsumption(u32),
    #[error("run replay failed: {0}")]
    Replay(String),
    #[error("event {0} does not map onto its transition environment")]
    BrokenHomomorphism(u32),
}

/// A condition of a run, with its producer/consumer within the run.
#[derive(Debug, Clone)]
pub struct RunCondition {
    pub place: PlaceId,
    pub side: PlaceSide,
    pub producer: Option<usize>,
    pub consumer: Option<usize>,
}

/// An event of a run, annotated with the alignment move it performs.
#[derive(Debug, Clone)]
pub struct RunEvent {
    pub transition: TransId,
    pub mv: Move,
    pub preset: Vec<usize>,
    pub postset: Vec<usize>,
}

/// A causal net over the extended product: the local distributed run of
/// a target event plus the produced conditions, with a single sink.
#[derive(Debug, Clone)]
pub struct AlignmentRun<C> {
    /// Events in prefix insertion order; causally consistent.
    pub events: Vec<RunEvent>,
    pub conditions: Vec<RunCondition>,
    /// Index of the target event in `events` (always the last).
    pub target_event: usize,
    /// `s([e*])`: summed move costs, the target transition being free.
    pub cost: C,
}

impl<C: CostValue> AlignmentRun<C> {
    /// Extracts the run of a recorded target event. The target event must
    /// already be materialized in the prefix.
    pub fn from_prefix(spn: &MoveNet, prefix: &Prefix<C>, target: EvId) -> Result<Self, RunError> {
        let cfg = prefix.local_configuration(target);
        let cost = cfg.cost().clone();
        let ids: Vec<u32> = cfg.events().to_vec();
        let ev_index = |id: u32| ids.binary_search(&id).expect("config member");

        // Conditions: initials plus every postset of the run's events.
        let mut cond_ids = prefix.initial_conditions().to_vec();
        for &e in &ids {
            debug_assert!(!matches!(
                prefix.event(EvId(e)).state,
                EventState::Queued | EventState::Discarded
            ));
            cond_ids.extend(prefix.event(EvId(e)).postset.iter().copied());
        }
        let cond_index = |c: super::prefix::CondId| {
            cond_ids
                .iter()
                .position(|&x| x == c)
                .expect("run condition")
        };

        let mut conditions: Vec<RunCondition> = cond_ids
            .iter()
            .map(|&c| {
                let cond = prefix.condition(c);
                RunCondition {
                    place: cond.place,
                    side: spn.side(cond.place),
                    producer: cond.producer.map(|e| ev_index(e.0)),
                    consumer: None,
                }
            })
            .collect();

        let mut events = Vec::with_capacity(ids.len());
        for (i, &e) in ids.iter().enumerate() {
            let node = prefix.event(EvId(e));
            let preset: Vec<usize> = node.preset.iter().map(|&c| cond_index(c)).collect();
            for &c in &preset {
                if conditions[c].consumer.is_some() {
                    return Err(RunError::DoubleConsumption(c as u32));
                }
                conditions[c].consumer = Some(i);
            }
            let postset: Vec<usize> = node.postset.iter().map(|&c| cond_index(c)).collect();
            events.push(RunEvent {
                transition: node.transition,
                mv: spn.move_of(node.transition).clone(),
                preset,
                postset,
            });
        }

        let target_event = ev_index(target.0);
        let run = AlignmentRun {
            events,
            conditions,
            target_event,
            cost,
        };
        let sinks: Vec<usize> = run.sink_conditions();
        if sinks.len() != 1 || run.conditions[sinks[0]].producer != Some(target_event) {
            return Err(RunError::NotSingleSink(sinks.len()));
        }
        Ok(run)
    }

    pub fn sink_conditions(&self) -> Vec<usize> {
        (0..self.conditions.len())
            .filter(|&c| self.conditions[c].consumer.is_none())
            .collect()
    }

    /// Move counts as (sync, log, model, invisible).
    pub fn move_counts(&self) -> (usize, usize, usize, usize) {
        let mut counts = (0, 0, 0, 0);
        for e in &self.events {
            match &e.mv {
                Move::Sync { .. } => counts.0 += 1,
                Move::Log { .. } => counts.1 += 1,
                Move::Model { label: Some(_), .. } => counts.2 += 1,
                Move::Model { label: None, .. } => counts.3 += 1,
                Move::Target => {}
            }
        }
        counts
    }

    /// Checks the causal-net axioms on the run structure:
    /// at most one producer and one consumer per condition, acyclicity,
    /// absence of (self-)conflict, and the homomorphism property that
    /// every event's condition environment maps exactly onto its
    /// transition's place environment.
    pub fn verify_causal_net(&self, spn: &MoveNet) -> Result<(), RunError> {
        // Producer/consumer uniqueness is structural (single fields); a
        // condition consumed twice is rejected at construction. Check
        // acyclicity: producers precede consumers in event order.
        for (ci, cond) in self.conditions.iter().enumerate() {
            if let (Some(p), Some(c)) = (cond.producer, cond.consumer) {
                if p >= c {
                    return Err(RunError::Replay(format!(
                        "condition {ci} produced at {p} but consumed at {c}"
                    )));
                }
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            let mut env: Vec<PlaceId> =
                e.preset.iter().map(|&c| self.conditions[c].place).collect();
            env.sort_unstable();
            if env != spn.net.pre_t(e.transition) {
                return Err(RunError::BrokenHomomorphism(i as u32));
            }
            let mut env: Vec<PlaceId> = e
                .postset
                .iter()
                .map(|&c| self.conditions[c].place)
                .collect();
            env.sort_unstable();
            if env != spn.net.post_t(e.transition) {
                return Err(RunError::BrokenHomomorphism(i as u32));
            }
        }
        Ok(())
    }

    /// Replays the run's events in order on the product net; the result
    /// must be the extended final marking.
    pub fn replay(&self, spn: &MoveNet) -> Result<Marking, RunError> {
        let mut m = spn.net.m_init().clone();
        for e in &self.events {
            m = spn
                .net
                .fire(&m, e.transition)
                .map_err(|err| RunError::Replay(err.to_string()))?;
        }
        Ok(m)
    }

    /// The firing sequence of product transitions, in run order.
    pub fn transition_sequence(&self) -> Vec<TransId> {
        self.events.iter().map(|e| e.transition).collect()
    }

    /// Canonical content signature: each event hashed by its transition
    /// and, recursively, the signatures of its direct causes with the
    /// places they flow through. Isomorphic runs get equal signatures.
    pub fn signature(&self, spn: &MoveNet) -> String {
        let mut sigs: Vec<Option<String>> = vec![None; self.events.len()];
        fn sig_of<C: CostValue>(
            run: &AlignmentRun<C>,
            spn: &MoveNet,
            e: usize,
            sigs: &mut Vec<Option<String>>,
        ) -> String {
            if let Some(s) = &sigs[e] {
                return s.clone();
            }
            let mut deps: Vec<String> = run.events[e]
                .preset
                .iter()
                .map(|&c| {
                    let cond = &run.conditions[c];
                    let place = spn.net.place_name(cond.place);
                    match cond.producer {
                        Some(p) => format!("{place}<{}", sig_of(run, spn, p, sigs)),
                        None => format!("{place}<init"),
                    }
                })
                .collect();
            deps.sort();
            let s = format!(
                "{}({})",
                spn.net.trans_name(run.events[e].transition),
                deps.join(",")
            );
            sigs[e] = Some(s.clone());
            s
        }
        let mut all: Vec<String> = (0..self.events.len())
            .map(|e| sig_of(self, spn, e, &mut sigs))
            .collect();
        all.sort();
        all.join(";")
    }
}
