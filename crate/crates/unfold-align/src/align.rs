//! One-call alignment pipeline: trace net, product, extension, engine
//! dispatch, order construction, decomposition and diagnostics.

use crate::aligner::{
    decompose, diagnose, run_to_alignment_order, AlignmentOrder, Diagnostics, UAlignment,
};
use crate::baseline::{astar_alignment, replay_to_run, BaselineError};
use crate::petri::SystemNet;
use crate::product::{extended_product, CostModel, MoveNet};
use crate::ptrace::PTrace;
use crate::scalar::CostValue;
use crate::unfold::{unfold, AlignmentRun, Budget, OrderKind, UnfoldError, UnfoldOptions};
use std::str::FromStr;
use thiserror::Error;

/// Selectable alignment engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    UnfoldCost,
    UnfoldHeuristic,
    ClassicPa,
}

impl Engine {
    pub const ALL: [Engine; 3] = [
        Engine::UnfoldCost,
        Engine::UnfoldHeuristic,
        Engine::ClassicPa,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::UnfoldCost => "unfold-cost",
            Engine::UnfoldHeuristic => "unfold-heuristic",
            Engine::ClassicPa => "classic-pa",
        }
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unfold-cost" => Ok(Engine::UnfoldCost),
            "unfold-heuristic" => Ok(Engine::UnfoldHeuristic),
            "classic-pa" => Ok(Engine::ClassicPa),
            other => Err(format!(
                "unknown engine {other:?}; expected unfold-cost, unfold-heuristic or classic-pa"
            )),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("alignment timed out")]
    Timeout,
    #[error("model is not easy sound (no complete run reaches the final marking)")]
    NotEasySound,
    #[error(transparent)]
    Unfold(UnfoldError),
    #[error(transparent)]
    Baseline(BaselineError),
}

/// Search effort indicators, comparable across engines.
#[derive(Debug, Clone, Default)]
pub struct SearchStats {
    /// Events appended (prefix engines) or markings expanded (classic).
    pub events: usize,
    pub queue_peak: usize,
}

/// Everything one alignment produces. Order, u-alignment and
/// diagnostics describe the primary run; with `all_optimal` the other
/// surviving optimal runs ride along for per-run processing.
#[derive(Debug)]
pub struct Alignment<C> {
    pub engine: Engine,
    pub cost: C,
    pub run: AlignmentRun<C>,
    pub extra_runs: Vec<AlignmentRun<C>>,
    pub order: AlignmentOrder,
    pub ua: UAlignment<C>,
    pub diagnostics: Diagnostics,
    pub stats: SearchStats,
}

/// Options for [`align_ptrace`].
#[derive(Debug, Clone)]
pub struct AlignOptions {
    pub engine: Engine,
    pub budget: Budget,
    /// Report silent model moves among undesired events.
    pub include_tau: bool,
    /// Collect all optimal runs instead of the first (prefix engines).
    pub all_optimal: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            engine: Engine::UnfoldHeuristic,
            budget: Budget::default(),
            include_tau: false,
            all_optimal: false,
        }
    }
}

/// Aligns one p-trace against a model net, end to end.
pub fn align_ptrace<C: CostValue>(
    model: &SystemNet,
    trace: &PTrace,
    cm: &CostModel<C>,
    opts: &AlignOptions,
) -> Result<Alignment<C>, AlignError> {
    let spn = extended_product(trace, model);
    align_product(&spn, cm, opts)
}

/// Aligns an already-built extended product net.
pub fn align_product<C: CostValue>(
    spn: &MoveNet,
    cm: &CostModel<C>,
    opts: &AlignOptions,
) -> Result<Alignment<C>, AlignError> {
    let (run, extra_runs, cost, stats) = match opts.engine {
        Engine::UnfoldCost | Engine::UnfoldHeuristic => {
            let order = match opts.engine {
                Engine::UnfoldCost => OrderKind::Cost,
                _ => OrderKind::Heuristic,
            };
            let uopts = UnfoldOptions {
                order,
                stop_at_first: !opts.all_optimal,
                early_exit: true,
                budget: opts.budget.clone(),
            };
            let out = unfold(spn, cm, &uopts).map_err(|e| match e {
                UnfoldError::BudgetExceeded { .. } => AlignError::Timeout,
                UnfoldError::ModelNotEasySound { .. } => AlignError::NotEasySound,
                other => AlignError::Unfold(other),
            })?;
            let stats = SearchStats {
                events: out.stats.events_appended,
                queue_peak: out.stats.queue_peak,
            };
            let mut runs = out.runs;
            let primary = runs.remove(0);
            (primary, runs, out.lowest_cost, stats)
        }
        Engine::ClassicPa => {
            let (seq, cost, stats) =
                astar_alignment(spn, cm, &opts.budget).map_err(|e| match e {
                    BaselineError::BudgetExceeded { .. } => AlignError::Timeout,
                    BaselineError::NoPath { .. } => AlignError::NotEasySound,
                    other => AlignError::Baseline(other),
                })?;
            let run = replay_to_run(spn, cm, &seq).map_err(AlignError::Baseline)?;
            let stats = SearchStats {
                events: stats.expanded,
                queue_peak: stats.queue_peak,
            };
            (run, Vec::new(), cost, stats)
        }
    };
    let order = run_to_alignment_order(&run);
    let ua = decompose(&order, cm);
    let diagnostics = diagnose(&ua, opts.include_tau);
    Ok(Alignment {
        engine: opts.engine,
        cost,
        run,
        extra_runs,
        order,
        ua,
        diagnostics,
        stats,
    })
}
