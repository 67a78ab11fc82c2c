//! Alignment report JSON: the serialized result of aligning one trace
//! variant, self-contained enough for the diagnose command to render.

use crate::align::Alignment;
use crate::aligner::{diagnose, DepRef, NodeKind};
use crate::scalar::{format_cost, CostValue};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoveJson {
    pub kind: String,
    /// Log-side activity; `null` on moves the log skips.
    pub log: Option<String>,
    /// Model-side activity, `"τ"` for invisible; `null` on skipped side.
    pub model: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepJson {
    pub from: u32,
    pub to: u32,
    pub from_label: String,
    pub to_label: String,
}

impl From<&DepRef> for DepJson {
    fn from(d: &DepRef) -> Self {
        DepJson {
            from: d.from,
            to: d.to,
            from_label: d.from_label.clone(),
            to_label: d.to_label.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRefJson {
    pub node: u32,
    pub label: String,
}

/// Diagnostics are stored with τ moves included; `include_tau` records
/// the display default the report was produced with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsJson {
    pub missing_events: Vec<EventRefJson>,
    pub undesired_events: Vec<EventRefJson>,
    pub missing_deps: Vec<DepJson>,
    pub undesired_deps: Vec<DepJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    /// Representative case of the variant.
    pub case: String,
    /// All cases sharing this variant.
    pub cases: Vec<String>,
    pub engine: String,
    /// Exact cost (decimal where one exists, otherwise `num/den`).
    pub cost: String,
    /// Lossy numeric cost for quick consumption.
    pub cost_value: f64,
    pub include_tau: bool,
    /// Moves of the alignment order, in deterministic causal order.
    pub moves: Vec<MoveJson>,
    /// Dependencies among `moves` tagged as originating from the log.
    pub log_deps: Vec<(u32, u32)>,
    /// Dependencies among `moves` tagged as originating from the model.
    pub model_deps: Vec<(u32, u32)>,
    /// Synchronous pairings as (log-side node, model-side node) of the
    /// decomposed u-alignment.
    pub phi: Vec<(u32, u32)>,
    /// How many optimal runs the search kept (1 unless all-optimal mode).
    pub optimal_runs: usize,
    pub diagnostics: DiagnosticsJson,
}

impl Report {
    pub fn build<C: CostValue>(
        cases: Vec<String>,
        alignment: &Alignment<C>,
        include_tau: bool,
    ) -> Report {
        let order = &alignment.order;
        let moves = order
            .nodes
            .iter()
            .map(|n| MoveJson {
                kind: match n.kind {
                    NodeKind::Sync => "sync",
                    NodeKind::Log => "log",
                    NodeKind::Model => "model",
                    NodeKind::Invisible => "invisible",
                }
                .to_string(),
                log: (!n.log_part.is_skip()).then(|| n.log_part.display()),
                model: (!n.model_part.is_skip()).then(|| n.model_part.display()),
            })
            .collect();
        let log_deps = order
            .edges
            .iter()
            .filter(|(_, t)| t.log)
            .map(|(&e, _)| e)
            .collect();
        let model_deps = order
            .edges
            .iter()
            .filter(|(_, t)| t.model)
            .map(|(&e, _)| e)
            .collect();
        // Stored diagnostics always carry τ; display layers filter.
        let full = diagnose(&alignment.ua, true);
        let diagnostics = DiagnosticsJson {
            missing_events: full
                .missing_events
                .iter()
                .map(|(n, l)| EventRefJson {
                    node: *n,
                    label: l.clone(),
                })
                .collect(),
            undesired_events: full
                .undesired_events
                .iter()
                .map(|(n, l)| EventRefJson {
                    node: *n,
                    label: l.clone(),
                })
                .collect(),
            missing_deps: full.missing_deps.iter().map(DepJson::from).collect(),
            undesired_deps: full.undesired_deps.iter().map(DepJson::from).collect(),
        };
        Report {
            case: cases.first().cloned().unwrap_or_default(),
            cases,
            engine: alignment.engine.name().to_string(),
            cost: format_cost(&alignment.cost),
            cost_value: alignment.cost.to_f64_lossy(),
            include_tau,
            moves,
            log_deps,
            model_deps,
            phi: alignment.ua.phi.clone(),
            optimal_runs: 1 + alignment.extra_runs.len(),
            diagnostics,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization") + "\n"
    }

    /// Human-readable deviation table. `include_tau` toggles τ rows among
    /// undesired events.
    pub fn render_diagnosis(&self, include_tau: bool) -> String {
        let d = &self.diagnostics;
        let mut out = String::new();
        out.push_str(&format!(
            "case {} ({} case(s) in variant), engine {}, cost {}\n",
            self.case,
            self.cases.len(),
            self.engine,
            self.cost
        ));
        let undesired: Vec<&EventRefJson> = d
            .undesired_events
            .iter()
            .filter(|e| include_tau || e.label != "τ")
            .collect();
        if d.missing_events.is_empty()
            && undesired.is_empty()
            && d.missing_deps.is_empty()
            && d.undesired_deps.is_empty()
        {
            out.push_str("conforming: no deviations\n");
            return out;
        }
        for e in &d.missing_events {
            out.push_str(&format!(
                "MISSING EVENT    {:<20} observed in log, not replayable in model\n",
                e.label
            ));
        }
        for e in undesired {
            out.push_str(&format!(
                "UNDESIRED EVENT  {:<20} required by model, absent from log\n",
                e.label
            ));
        }
        for dep in &d.missing_deps {
            out.push_str(&format!(
                "MISSING DEP      {} → {}  log orders them; model does not\n",
                dep.from_label, dep.to_label
            ));
        }
        for dep in &d.undesired_deps {
            out.push_str(&format!(
                "UNDESIRED DEP    {} → {}  model requires this order; log lacks it\n",
                dep.from_label, dep.to_label
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{align_ptrace, AlignOptions};
    use crate::fixtures;
    use crate::product::CostModel;
    use crate::Rational;

    #[test]
    fn fig5_report_fields() {
        let (model, trace) = fixtures::fig5_instance();
        let cm = CostModel::<Rational>::default();
        let a = align_ptrace(&model, &trace, &cm, &AlignOptions::default()).unwrap();
        let report = Report::build(vec!["fig5".into()], &a, false);
        assert_eq!(report.cost, "3.0001");
        assert_eq!(report.cost_value, 3.0001);
        assert_eq!(report.moves.len(), 6);
        assert_eq!(report.phi.len(), 2);
        assert_eq!(report.diagnostics.missing_events.len(), 2);
        assert_eq!(report.diagnostics.undesired_events.len(), 2);
        assert_eq!(report.diagnostics.missing_deps.len(), 3);
        assert_eq!(report.diagnostics.undesired_deps.len(), 3);
        assert_eq!((report.log_deps.len(), report.model_deps.len()), (3, 3));

        // Round trip through JSON.
        let text = report.to_json_pretty();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.cost, report.cost);
        assert_eq!(back.moves.len(), report.moves.len());

        // Table: default hides τ (3 event rows), flag shows it (4).
        let hidden = report.render_diagnosis(false);
        assert_eq!(hidden.matches("EVENT").count(), 3);
        let shown = report.render_diagnosis(true);
        assert_eq!(shown.matches("EVENT").count(), 4);
        assert_eq!(shown.matches("DEP").count(), 6);
    }

    #[test]
    fn conforming_report_prints_conforming() {
        let f = fixtures::corpus()
            .into_iter()
            .find(|f| f.name == "single-sync")
            .unwrap();
        let cm = CostModel::<Rational>::default();
        let a = align_ptrace(&f.model, &f.trace, &cm, &AlignOptions::default()).unwrap();
        let report = Report::build(vec![f.trace.case_id.clone()], &a, false);
        assert!(report.render_diagnosis(false).contains("conforming"));
    }
}
