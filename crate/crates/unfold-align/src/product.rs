//! Synchronous product of a trace net and a model net, its target
//! extension, and the move cost model.
//!
//! Product transitions are alignment moves: a log move advances only the
//! trace side, a model move only the model side, and a synchronous move
//! pairs two equally labeled transitions and advances both.

use crate::petri::{PlaceId, SystemNet, TransId};
use crate::ptrace::{EventId, TraceNet};
use crate::scalar::CostValue;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

/// Which side of the product a place belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaceSide {
    Log,
    Model,
    Target,
}

/// The alignment move a product transition stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// Trace-side only; labels are never silent on the log side.
    Log {
        trace_trans: TransId,
        event: EventId,
        label: Arc<str>,
    },
    /// Model-side only; `label = None` is an invisible (τ) move.
    Model {
        model_trans: TransId,
        label: Option<Arc<str>>,
    },
    /// Both sides advance on a shared label.
    Sync {
        trace_trans: TransId,
        event: EventId,
        model_trans: TransId,
        label: Arc<str>,
    },
    /// The target transition closing the final marking; not a move.
    Target,
}

impl Move {
    pub fn is_sync(&self) -> bool {
        matches!(self, Move::Sync { .. })
    }

    pub fn is_invisible(&self) -> bool {
        matches!(self, Move::Model { label: None, .. })
    }
}

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("the product net is already extended with a target transition")]
    AlreadyExtended,
    #[error("operation requires an extended product net")]
    NotExtended,
}

/// Move costs. Synchronous moves are free, log/model moves carry unit-ish
/// positive costs and invisible moves a negligible positive cost, so
/// run cost counts deviations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel<C> {
    pub log_cost: C,
    pub model_cost: C,
    pub sync_cost: C,
    pub tau_cost: C,
}

impl<C: CostValue> Default for CostModel<C> {
    fn default() -> Self {
        CostModel {
            log_cost: C::one(),
            model_cost: C::one(),
            sync_cost: C::zero(),
            tau_cost: C::ratio(1, 10_000),
        }
    }
}

#[derive(Debug, Error)]
pub enum CostModelError {
    #[error("sync_cost must be zero")]
    NonzeroSyncCost,
    #[error("log_cost, model_cost and tau_cost must be positive")]
    NonPositiveCost,
    #[error("tau_cost must be smaller than log_cost and model_cost")]
    TauTooExpensive,
}

impl<C: CostValue> CostModel<C> {
    pub fn validate(&self) -> Result<(), CostModelError> {
        if !self.sync_cost.is_zero() {
            return Err(CostModelError::NonzeroSyncCost);
        }
        if self.log_cost <= C::zero() || self.model_cost <= C::zero() || self.tau_cost <= C::zero()
        {
            return Err(CostModelError::NonPositiveCost);
        }
        if self.tau_cost >= self.log_cost || self.tau_cost >= self.model_cost {
            return Err(CostModelError::TauTooExpensive);
        }
        Ok(())
    }

    /// Cost of one move. The target transition is free.
    pub fn move_cost(&self, mv: &Move) -> C {
        match mv {
            Move::Sync { .. } => self.sync_cost.clone(),
            Move::Log { .. } => self.log_cost.clone(),
            Move::Model { label: Some(_), .. } => self.model_cost.clone(),
            Move::Model { label: None, .. } => self.tau_cost.clone(),
            Move::Target => C::zero(),
        }
    }
}

/// The product system net with per-transition move annotations and
/// per-place side tags.
#[derive(Debug, Clone)]
pub struct MoveNet {
    pub net: SystemNet,
    moves: Vec<Move>,
    side: Vec<PlaceSide>,
    target: Option<TransId>,
    target_place: Option<PlaceId>,
}

impl MoveNet {
    pub fn move_of(&self, t: TransId) -> &Move {
        &self.moves[t.index()]
    }

    pub fn side(&self, p: PlaceId) -> PlaceSide {
        self.side[p.index()]
    }

    pub fn is_extended(&self) -> bool {
        self.target.is_some()
    }

    /// The target transition, once extended.
    pub fn target(&self) -> Option<TransId> {
        self.target
    }

    pub fn target_place(&self) -> Option<PlaceId> {
        self.target_place
    }

    /// Per-transition move costs, indexed by transition id.
    pub fn move_costs<C: CostValue>(&self, cm: &CostModel<C>) -> Vec<C> {
        self.moves.iter().map(|m| cm.move_cost(m)).collect()
    }

    /// Cost of a firing sequence, target transition excluded.
    pub fn sequence_cost<C: CostValue>(&self, cm: &CostModel<C>, seq: &[TransId]) -> C {
        seq.iter().map(|&t| cm.move_cost(self.move_of(t))).sum()
    }
}

/// Builds the synchronous product: disjoint copies of both nets plus one
/// synchronous transition per pair of equally (non-τ) labeled transitions.
pub fn synchronous_product(trace: &TraceNet, model: &SystemNet) -> MoveNet {
    let tnet = &trace.net;
    let mut b = SystemNet::builder();
    let mut side = Vec::new();

    // Place copies; log side first, then model side.
    let log_place: Vec<PlaceId> = tnet
        .places()
        .map(|p| {
            side.push(PlaceSide::Log);
            b.place(&format!("L:{}", tnet.place_name(p)))
        })
        .collect();
    let model_place: Vec<PlaceId> = model
        .places()
        .map(|p| {
            side.push(PlaceSide::Model);
            b.place(&format!("M:{}", model.place_name(p)))
        })
        .collect();

    // Log moves: every trace transition. Trace nets carry no τ labels.
    for t in tnet.transitions() {
        let label = tnet
            .label(t)
            .expect("trace transitions are labeled")
            .clone();
        let pt = b.transition(&format!("({},-)", tnet.trans_name(t)), Some(&label));
        debug_assert_eq!(pt.index(), t.index());
        for &p in tnet.pre_t(t) {
            b.arc_pt(log_place[p.index()], pt);
        }
        for &p in tnet.post_t(t) {
            b.arc_tp(pt, log_place[p.index()]);
        }
    }
    // Model moves: every model transition, silent ones included.
    for t in model.transitions() {
        let label = model.label(t).map(|l| l.to_string());
        let pt = b.transition(&format!("(-,{})", model.trans_name(t)), label.as_deref());
        for &p in model.pre_t(t) {
            b.arc_pt(model_place[p.index()], pt);
        }
        for &p in model.post_t(t) {
            b.arc_tp(pt, model_place[p.index()]);
        }
    }
    // Synchronous moves: one per pair with equal non-τ labels.
    let mut by_label: HashMap<&str, Vec<TransId>> = HashMap::new();
    for t in model.transitions() {
        if let Some(l) = model.label(t) {
            by_label.entry(l).or_default().push(t);
        }
    }
    let mut moves: Vec<Move> = tnet
        .transitions()
        .map(|t| Move::Log {
            trace_trans: t,
            event: trace.event_of(t),
            label: tnet.label(t).unwrap().clone(),
        })
        .chain(model.transitions().map(|t| Move::Model {
            model_trans: t,
            label: model.label(t).cloned(),
        }))
        .collect();
    for t1 in tnet.transitions() {
        let label = tnet.label(t1).unwrap();
        for &t2 in by_label
            .get(label.as_ref())
            .map(|v| v.as_slice())
            .unwrap_or(&[])
        {
            let pt = b.transition(
                &format!("({},{})", tnet.trans_name(t1), model.trans_name(t2)),
                Some(label),
            );
            for &p in tnet.pre_t(t1) {
                b.arc_pt(log_place[p.index()], pt);
            }
            for &p in model.pre_t(t2) {
                b.arc_pt(model_place[p.index()], pt);
            }
            for &p in tnet.post_t(t1) {
                b.arc_tp(pt, log_place[p.index()]);
            }
            for &p in model.post_t(t2) {
                b.arc_tp(pt, model_place[p.index()]);
            }
            moves.push(Move::Sync {
                trace_trans: t1,
                event: trace.event_of(t1),
                model_trans: t2,
                label: label.clone(),
            });
        }
    }

    let init: Vec<PlaceId> = tnet
        .m_init()
        .iter()
        .map(|p| log_place[p.index()])
        .chain(model.m_init().iter().map(|p| model_place[p.index()]))
        .collect();
    let fin: Vec<PlaceId> = tnet
        .m_final()
        .iter()
        .map(|p| log_place[p.index()])
        .chain(model.m_final().iter().map(|p| model_place[p.index()]))
        .collect();
    b.initial(&init);
    b.final_marking(&fin);

    MoveNet {
        net: b.build(),
        moves,
        side,
        target: None,
        target_place: None,
    }
}

/// Adds the target transition consuming the whole final marking and the
/// target place behind it; the final marking becomes that single place.
pub fn extend_with_target(spn: MoveNet) -> Result<MoveNet, ProductError> {
    if spn.is_extended() {
        return Err(ProductError::AlreadyExtended);
    }
    let MoveNet {
        net,
        mut moves,
        mut side,
        ..
    } = spn;
    let mut b = SystemNet::builder();
    for p in net.places() {
        b.place(net.place_name(p));
    }
    for t in net.transitions() {
        let label = net.label(t).map(|l| l.to_string());
        let nt = b.transition(net.trans_name(t), label.as_deref());
        for &p in net.pre_t(t) {
            b.arc_pt(p, nt);
        }
        for &p in net.post_t(t) {
            b.arc_tp(nt, p);
        }
    }
    let t_star = b.transition("t*", None);
    let p_star = b.place("p*");
    for p in net.m_final().iter() {
        b.arc_pt(p, t_star);
    }
    b.arc_tp(t_star, p_star);
    let init: Vec<PlaceId> = net.m_init().iter().collect();
    b.initial(&init);
    b.final_marking(&[p_star]);
    moves.push(Move::Target);
    side.push(PlaceSide::Target);
    Ok(MoveNet {
        net: b.build(),
        moves,
        side,
        target: Some(t_star),
        target_place: Some(p_star),
    })
}

/// Cost of a single move under a cost model. Free function mirror of
/// [`CostModel::move_cost`].
pub fn move_cost<C: CostValue>(cm: &CostModel<C>, mv: &Move) -> C {
    cm.move_cost(mv)
}

impl MoveNet {
    /// Debug rendering in DOT, colored by origin: orange log, blue model,
    /// green synchronous, red target, grey τ.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph product {\n  rankdir=LR;\n");
        for p in self.net.places() {
            let color = match self.side(p) {
                PlaceSide::Log => "#ef6c00",
                PlaceSide::Model => "#1565c0",
                PlaceSide::Target => "#c62828",
            };
            let mark = if self.net.m_init().contains(p) {
                "&bull;"
            } else {
                ""
            };
            let _ = writeln!(
                s,
                "  p{} [shape=circle color=\"{}\" label=\"{}{}\"];",
                p.0,
                color,
                self.net.place_name(p),
                mark
            );
        }
        for t in self.net.transitions() {
            let color = match self.move_of(t) {
                Move::Log { .. } => "#ef6c00",
                Move::Model { label: Some(_), .. } => "#1565c0",
                Move::Model { label: None, .. } => "#9e9e9e",
                Move::Sync { .. } => "#2e7d32",
                Move::Target => "#c62828",
            };
            let _ = writeln!(
                s,
                "  t{} [shape=box style=filled fillcolor=\"{}\" fontcolor=white label=\"{}\"];",
                t.0,
                color,
                self.net.trans_name(t)
            );
            for &p in self.net.pre_t(t) {
                let _ = writeln!(s, "  p{} -> t{};", p.0, t.0);
            }
            for &p in self.net.post_t(t) {
                let _ = writeln!(s, "  t{} -> p{};", t.0, p.0);
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Convenience: full pipeline from p-trace and model to the extended
/// product net.
pub fn extended_product(trace: &crate::ptrace::PTrace, model: &SystemNet) -> MoveNet {
    let tn = crate::ptrace::ptrace_to_trace_net(trace);
    extend_with_target(synchronous_product(&tn, model)).expect("fresh product is unextended")
}

/// Expected transition count of a product: all log copies, all model
/// copies, and one synchronous transition per equal-label pair.
pub fn expected_transition_count(trace_net: &SystemNet, model: &SystemNet) -> usize {
    let mut by_label: HashMap<&str, usize> = HashMap::new();
    for t in model.transitions() {
        if let Some(l) = model.label(t) {
            *by_label.entry(l).or_default() += 1;
        }
    }
    let sync: usize = trace_net
        .transitions()
        .filter_map(|t| trace_net.label(t))
        .map(|l| by_label.get(l.as_ref()).copied().unwrap_or(0))
        .sum();
    trace_net.n_transitions() + model.n_transitions() + sync
}
