//! From optimal alignment runs to interpretable results: the fused
//! alignment order, its decomposition into a u-alignment (log side, model
//! side, alignment function), and missing/undesired deviation
//! diagnostics over the transitive reductions of the two sides.

use crate::dag::{self, LabeledDag};
use crate::product::{CostModel, Move};
use crate::ptrace::EventId;
use crate::scalar::CostValue;
use crate::unfold::AlignmentRun;
use std::collections::BTreeMap;
use std::sync::Arc;

pub use crate::dag::transitive_reduction;

/// One side of an alignment move: skipped, silent, or a visible activity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum MovePart {
    Skip,
    Tau,
    Act(Arc<str>),
}

impl MovePart {
    pub fn is_skip(&self) -> bool {
        matches!(self, MovePart::Skip)
    }

    pub fn display(&self) -> String {
        match self {
            MovePart::Skip => ">>".to_string(),
            MovePart::Tau => "τ".to_string(),
            MovePart::Act(l) => l.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Sync,
    Log,
    Model,
    Invisible,
}

/// A node of the alignment order: one alignment move.
#[derive(Debug, Clone)]
pub struct MoveNode {
    pub kind: NodeKind,
    pub log_part: MovePart,
    pub model_part: MovePart,
    /// Trace event behind the log part, where present.
    pub event: Option<EventId>,
}

/// Edge provenance: which side(s) of the run the dependency came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DepTags {
    pub log: bool,
    pub model: bool,
}

/// The fused partial order of alignment moves, with origin-tagged edges.
#[derive(Debug, Clone)]
pub struct AlignmentOrder {
    pub nodes: Vec<MoveNode>,
    pub edges: BTreeMap<(u32, u32), DepTags>,
}

impl AlignmentOrder {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_list(&self) -> Vec<(u32, u32)> {
        self.edges.keys().copied().collect()
    }

    pub fn is_acyclic(&self) -> bool {
        dag::is_acyclic(self.nodes.len(), &self.edge_list())
    }

    /// Label pairs as a comparable DAG, for round-trip checks.
    pub fn to_dag(&self) -> LabeledDag<(MovePart, MovePart)> {
        LabeledDag::new(
            self.nodes
                .iter()
                .map(|n| (n.log_part.clone(), n.model_part.clone()))
                .collect(),
            self.edge_list(),
        )
    }
}

/// Builds the alignment order of a run: the target event is dropped, every
/// other event becomes a move node, and each intra-run condition becomes a
/// dependency tagged by the side of its place (a sync-to-sync pair flowing
/// through both sides collapses to one edge with both tags).
pub fn run_to_alignment_order<C: CostValue>(run: &AlignmentRun<C>) -> AlignmentOrder {
    let target = run.target_event;
    let nodes: Vec<MoveNode> = run
        .events
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target)
        .map(|(_, e)| match &e.mv {
            Move::Sync { label, event, .. } => MoveNode {
                kind: NodeKind::Sync,
                log_part: MovePart::Act(label.clone()),
                model_part: MovePart::Act(label.clone()),
                event: Some(*event),
            },
            Move::Log { label, event, .. } => MoveNode {
                kind: NodeKind::Log,
                log_part: MovePart::Act(label.clone()),
                model_part: MovePart::Skip,
                event: Some(*event),
            },
            Move::Model { label: Some(l), .. } => MoveNode {
                kind: NodeKind::Model,
                log_part: MovePart::Skip,
                model_part: MovePart::Act(l.clone()),
                event: None,
            },
            Move::Model { label: None, .. } => MoveNode {
                kind: NodeKind::Invisible,
                log_part: MovePart::Skip,
                model_part: MovePart::Tau,
                event: None,
            },
            Move::Target => unreachable!("only the final event maps to the target"),
        })
        .collect();
    // Event indices shift only past the target; the target is last.
    debug_assert_eq!(target, run.events.len() - 1);
    let mut edges: BTreeMap<(u32, u32), DepTags> = BTreeMap::new();
    for cond in &run.conditions {
        let (Some(u), Some(v)) = (cond.producer, cond.consumer) else {
            continue;
        };
        if u == target || v == target {
            continue;
        }
        let tags = edges.entry((u as u32, v as u32)).or_default();
        match cond.side {
            crate::product::PlaceSide::Log => tags.log = true,
            crate::product::PlaceSide::Model => tags.model = true,
            crate::product::PlaceSide::Target => unreachable!("target place borders t* only"),
        }
    }
    AlignmentOrder { nodes, edges }
}

/// One decomposed side of a u-alignment.
#[derive(Debug, Clone)]
pub struct SideGraph {
    /// Node labels; `Tau` only occurs on the model side.
    pub labels: Vec<MovePart>,
    pub edges: Vec<(u32, u32)>,
    /// Alignment-order node behind each side node.
    pub origin: Vec<u32>,
}

impl SideGraph {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn to_dag(&self) -> LabeledDag<MovePart> {
        LabeledDag::new(self.labels.clone(), self.edges.clone())
    }

    /// String-labeled view (τ rendered as "τ") for isomorphism checks.
    pub fn to_string_dag(&self) -> LabeledDag<String> {
        LabeledDag::new(
            self.labels.iter().map(|l| l.display()).collect(),
            self.edges.clone(),
        )
    }
}

/// A u-alignment: trace-shaped log order, model-run order, and the
/// injective alignment function pairing synchronous nodes.
#[derive(Debug, Clone)]
pub struct UAlignment<C> {
    pub log_side: SideGraph,
    pub model_side: SideGraph,
    /// Pairs `(log node, model node)`, one per synchronous move.
    pub phi: Vec<(u32, u32)>,
    pub cost: C,
}

/// Splits an alignment order into its log and model sides, keeping edges
/// of matching provenance, and splits each synchronous node into a
/// φ-linked pair. Cost is recomputed from node kinds.
pub fn decompose<C: CostValue>(order: &AlignmentOrder, cm: &CostModel<C>) -> UAlignment<C> {
    let n = order.nodes.len();
    let mut log_of = vec![u32::MAX; n];
    let mut model_of = vec![u32::MAX; n];
    let mut log_side = SideGraph {
        labels: Vec::new(),
        edges: Vec::new(),
        origin: Vec::new(),
    };
    let mut model_side = SideGraph {
        labels: Vec::new(),
        edges: Vec::new(),
        origin: Vec::new(),
    };
    let mut phi = Vec::new();
    let mut cost = C::zero();
    for (i, node) in order.nodes.iter().enumerate() {
        if !node.log_part.is_skip() {
            log_of[i] = log_side.labels.len() as u32;
            log_side.labels.push(node.log_part.clone());
            log_side.origin.push(i as u32);
        }
        if !node.model_part.is_skip() {
            model_of[i] = model_side.labels.len() as u32;
            model_side.labels.push(node.model_part.clone());
            model_side.origin.push(i as u32);
        }
        match node.kind {
            NodeKind::Sync => {
                phi.push((log_of[i], model_of[i]));
                cost = cost + cm.sync_cost.clone();
            }
            NodeKind::Log => cost = cost + cm.log_cost.clone(),
            NodeKind::Model => cost = cost + cm.model_cost.clone(),
            NodeKind::Invisible => cost = cost + cm.tau_cost.clone(),
        }
    }
    for (&(u, v), tags) in &order.edges {
        let (u, v) = (u as usize, v as usize);
        if tags.log && log_of[u] != u32::MAX && log_of[v] != u32::MAX {
            log_side.edges.push((log_of[u], log_of[v]));
        }
        if tags.model && model_of[u] != u32::MAX && model_of[v] != u32::MAX {
            model_side.edges.push((model_of[u], model_of[v]));
        }
    }
    log_side.edges.sort_unstable();
    model_side.edges.sort_unstable();
    UAlignment {
        log_side,
        model_side,
        phi,
        cost,
    }
}

impl<C: CostValue> UAlignment<C> {
    /// Fuses the two sides back on φ; must be acyclic for a valid
    /// u-alignment, and reproduces the alignment order up to isomorphism.
    pub fn fuse(&self) -> LabeledDag<(MovePart, MovePart)> {
        let model_to_log: BTreeMap<u32, u32> = self.phi.iter().map(|&(l, m)| (m, l)).collect();
        let log_to_model: BTreeMap<u32, u32> = self.phi.iter().map(|&(l, m)| (l, m)).collect();
        // Fused nodes: all log nodes, plus model nodes without a partner.
        let mut labels: Vec<(MovePart, MovePart)> = Vec::new();
        let mut fused_of_log = vec![u32::MAX; self.log_side.n()];
        let mut fused_of_model = vec![u32::MAX; self.model_side.n()];
        for (l, label) in self.log_side.labels.iter().enumerate() {
            fused_of_log[l] = labels.len() as u32;
            let model_part = match log_to_model.get(&(l as u32)) {
                Some(&m) => {
                    fused_of_model[m as usize] = labels.len() as u32;
                    self.model_side.labels[m as usize].clone()
                }
                None => MovePart::Skip,
            };
            labels.push((label.clone(), model_part));
        }
        for (m, label) in self.model_side.labels.iter().enumerate() {
            if model_to_log.contains_key(&(m as u32)) {
                continue;
            }
            fused_of_model[m] = labels.len() as u32;
            labels.push((MovePart::Skip, label.clone()));
        }
        let mut edges: Vec<(u32, u32)> = self
            .log_side
            .edges
            .iter()
            .map(|&(u, v)| (fused_of_log[u as usize], fused_of_log[v as usize]))
            .chain(
                self.model_side
                    .edges
                    .iter()
                    .map(|&(u, v)| (fused_of_model[u as usize], fused_of_model[v as usize])),
            )
            .collect();
        edges.sort_unstable();
        edges.dedup();
        LabeledDag::new(labels, edges)
    }

    pub fn fused_is_acyclic(&self) -> bool {
        let fused = self.fuse();
        dag::is_acyclic(fused.labels.len(), &fused.edges)
    }
}

/// A deviating dependency, referenced by side-node indices and labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepRef {
    pub from: u32,
    pub to: u32,
    pub from_label: String,
    pub to_label: String,
}

/// Deviation summary of one u-alignment. Event entries carry the side
/// node index and its label.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Log moves: observed but not replayable in the model.
    pub missing_events: Vec<(u32, String)>,
    /// Model(-only) moves: required by the model, absent from the log.
    pub undesired_events: Vec<(u32, String)>,
    /// Reduced log dependencies with no counterpart in the reduced model
    /// order.
    pub missing_deps: Vec<DepRef>,
    /// Reduced model dependencies with no counterpart in the reduced log
    /// order.
    pub undesired_deps: Vec<DepRef>,
}

impl Diagnostics {
    pub fn is_conforming(&self) -> bool {
        self.missing_events.is_empty()
            && self.undesired_events.is_empty()
            && self.missing_deps.is_empty()
            && self.undesired_deps.is_empty()
    }
}

/// Computes deviations on the transitive reductions of both sides.
/// Dependency pairs are bridged through φ: an edge matches only if both
/// endpoints are synchronous and their images form an edge on the other
/// side's reduction. `include_tau` controls whether silent model moves
/// count as undesired events (dependencies always see them).
pub fn diagnose<C: CostValue>(ua: &UAlignment<C>, include_tau: bool) -> Diagnostics {
    let red1 = dag::transitive_reduction(ua.log_side.n(), &ua.log_side.edges);
    let red2 = dag::transitive_reduction(ua.model_side.n(), &ua.model_side.edges);
    let log_to_model: BTreeMap<u32, u32> = ua.phi.iter().map(|&(l, m)| (l, m)).collect();
    let model_to_log: BTreeMap<u32, u32> = ua.phi.iter().map(|&(l, m)| (m, l)).collect();

    let mut diags = Diagnostics::default();
    for (l, label) in ua.log_side.labels.iter().enumerate() {
        if !log_to_model.contains_key(&(l as u32)) {
            diags.missing_events.push((l as u32, label.display()));
        }
    }
    for (m, label) in ua.model_side.labels.iter().enumerate() {
        if !model_to_log.contains_key(&(m as u32)) {
            if matches!(label, MovePart::Tau) && !include_tau {
                continue;
            }
            diags.undesired_events.push((m as u32, label.display()));
        }
    }
    for &(u, v) in &red1 {
        let matched = match (log_to_model.get(&u), log_to_model.get(&v)) {
            (Some(&mu), Some(&mv)) => red2.contains(&(mu, mv)),
            _ => false,
        };
        if !matched {
            diags.missing_deps.push(DepRef {
                from: u,
                to: v,
                from_label: ua.log_side.labels[u as usize].display(),
                to_label: ua.log_side.labels[v as usize].display(),
            });
        }
    }
    for &(u, v) in &red2 {
        let matched = match (model_to_log.get(&u), model_to_log.get(&v)) {
            (Some(&lu), Some(&lv)) => red1.contains(&(lu, lv)),
            _ => false,
        };
        if !matched {
            diags.undesired_deps.push(DepRef {
                from: u,
                to: v,
                from_label: ua.model_side.labels[u as usize].display(),
                to_label: ua.model_side.labels[v as usize].display(),
            });
        }
    }
    diags
}
