//! File formats: net JSON, p-trace JSON, the trace CSV reader/writer and
//! a PNML-subset reader for model interop.

use crate::petri::{PlaceId, SystemNet, TransId};
use crate::ptrace::RawEvent;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("xml error: {0}")]
    Xml(String),
    #[error("{0}")]
    Format(String),
}

fn format_err(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

// ---------------------------------------------------------------- net JSON

#[derive(Debug, Serialize, Deserialize)]
pub struct TransitionJson {
    pub id: String,
    /// `null` marks a silent (τ) transition.
    pub label: Option<String>,
}

/// On-disk net format: ids are names, arcs reference them.
#[derive(Debug, Serialize, Deserialize)]
pub struct NetJson {
    pub places: Vec<String>,
    pub transitions: Vec<TransitionJson>,
    pub arcs: Vec<(String, String)>,
    pub m_init: Vec<String>,
    pub m_final: Vec<String>,
}

pub fn net_from_json(text: &str) -> Result<SystemNet, IoError> {
    let parsed: NetJson = serde_json::from_str(text)?;
    net_from_parts(&parsed)
}

pub fn net_from_parts(parsed: &NetJson) -> Result<SystemNet, IoError> {
    let mut b = SystemNet::builder();
    let mut places: HashMap<&str, PlaceId> = HashMap::new();
    let mut transitions: HashMap<&str, TransId> = HashMap::new();
    for p in &parsed.places {
        if places.insert(p, b.place(p)).is_some() {
            return Err(format_err(format!("duplicate place id {p:?}")));
        }
    }
    for t in &parsed.transitions {
        if places.contains_key(t.id.as_str()) {
            return Err(format_err(format!(
                "id {:?} used for both a place and a transition",
                t.id
            )));
        }
        if transitions
            .insert(&t.id, b.transition(&t.id, t.label.as_deref()))
            .is_some()
        {
            return Err(format_err(format!("duplicate transition id {:?}", t.id)));
        }
    }
    for (src, dst) in &parsed.arcs {
        match (places.get(src.as_str()), transitions.get(dst.as_str())) {
            (Some(&p), Some(&t)) => {
                b.arc_pt(p, t);
                continue;
            }
            _ => match (transitions.get(src.as_str()), places.get(dst.as_str())) {
                (Some(&t), Some(&p)) => {
                    b.arc_tp(t, p);
                }
                _ => {
                    return Err(format_err(format!(
                        "arc [{src:?}, {dst:?}] must connect a place and a transition"
                    )))
                }
            },
        }
    }
    let resolve = |names: &[String], what: &str| -> Result<Vec<PlaceId>, IoError> {
        names
            .iter()
            .map(|n| {
                places
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| format_err(format!("{what} references unknown place {n:?}")))
            })
            .collect()
    };
    let init = resolve(&parsed.m_init, "m_init")?;
    let fin = resolve(&parsed.m_final, "m_final")?;
    b.initial(&init);
    b.final_marking(&fin);
    Ok(b.build())
}

pub fn net_to_json(net: &SystemNet) -> NetJson {
    let mut arcs = Vec::new();
    for t in net.transitions() {
        for &p in net.pre_t(t) {
            arcs.push((net.place_name(p).to_string(), net.trans_name(t).to_string()));
        }
        for &p in net.post_t(t) {
            arcs.push((net.trans_name(t).to_string(), net.place_name(p).to_string()));
        }
    }
    NetJson {
        places: net
            .places()
            .map(|p| net.place_name(p).to_string())
            .collect(),
        transitions: net
            .transitions()
            .map(|t| TransitionJson {
                id: net.trans_name(t).to_string(),
                label: net.label(t).map(|l| l.to_string()),
            })
            .collect(),
        arcs,
        m_init: net
            .m_init()
            .iter()
            .map(|p| net.place_name(p).to_string())
            .collect(),
        m_final: net
            .m_final()
            .iter()
            .map(|p| net.place_name(p).to_string())
            .collect(),
    }
}

// -------------------------------------------------------------- trace JSON

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeValue {
    Millis(i64),
    Text(String),
}

fn parse_time(v: &TimeValue, ctx: &str) -> Result<i64, IoError> {
    match v {
        TimeValue::Millis(ms) => Ok(*ms),
        TimeValue::Text(s) => chrono::DateTime::parse_from_rfc3339(s)
            .map(|dt| dt.timestamp_millis())
            .or_else(|_| s.parse::<i64>())
            .map_err(|_| format_err(format!("{ctx}: cannot parse timestamp {s:?}"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub activity: String,
    pub start: TimeValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<TimeValue>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceJson {
    pub case: String,
    pub events: Vec<EventJson>,
}

/// A parsed log: per-case raw events plus data-quality warnings.
#[derive(Debug, Default)]
pub struct RawLog {
    pub cases: Vec<(String, Vec<RawEvent>)>,
    pub warnings: Vec<String>,
}

fn trace_to_raw(t: &TraceJson, warnings: &mut Vec<String>) -> Result<Vec<RawEvent>, IoError> {
    t.events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let start = parse_time(&e.start, &format!("case {} event {i}", t.case))?;
            let end = match &e.end {
                Some(v) => parse_time(v, &format!("case {} event {i}", t.case))?,
                None => {
                    warnings.push(format!(
                        "case {} event {i} ({}): no end timestamp, assuming instantaneous",
                        t.case, e.activity
                    ));
                    start
                }
            };
            Ok(RawEvent {
                case_id: t.case.clone(),
                activity: e.activity.clone(),
                start_ms: start,
                end_ms: end,
            })
        })
        .collect()
}

/// Accepts a single trace object or an array of them.
pub fn log_from_json(text: &str) -> Result<RawLog, IoError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let traces: Vec<TraceJson> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    let mut log = RawLog::default();
    for t in &traces {
        let raw = trace_to_raw(t, &mut log.warnings)?;
        log.cases.push((t.case.clone(), raw));
    }
    Ok(log)
}

pub fn log_to_json(cases: &[(String, Vec<RawEvent>)]) -> String {
    let traces: Vec<TraceJson> = cases
        .iter()
        .map(|(case, events)| TraceJson {
            case: case.clone(),
            events: events
                .iter()
                .enumerate()
                .map(|(i, e)| EventJson {
                    id: Some(format!("e{i}")),
                    activity: e.activity.clone(),
                    start: TimeValue::Millis(e.start_ms),
                    end: Some(TimeValue::Millis(e.end_ms)),
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&traces).expect("log serialization") + "\n"
}

// --------------------------------------------------------------- trace CSV

/// CSV columns: `case,activity,start,end`, timestamps as epoch ms or
/// RFC 3339. A missing end falls back to the start with a warning.
pub fn log_from_csv(text: &str) -> Result<RawLog, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(c_case), Some(c_act), Some(c_start)) = (col("case"), col("activity"), col("start"))
    else {
        return Err(format_err(
            "csv needs case, activity, start (and ideally end) columns",
        ));
    };
    let c_end = col("end");
    let mut by_case: Vec<(String, Vec<RawEvent>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut warnings = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let case = record.get(c_case).unwrap_or_default().to_string();
        let activity = record.get(c_act).unwrap_or_default().to_string();
        let start = parse_time(
            &TimeValue::Text(record.get(c_start).unwrap_or_default().to_string()),
            &format!("csv line {}", line + 2),
        )?;
        let end = match c_end.and_then(|c| record.get(c)).filter(|v| !v.is_empty()) {
            Some(v) => parse_time(
                &TimeValue::Text(v.to_string()),
                &format!("csv line {}", line + 2),
            )?,
            None => {
                warnings.push(format!(
                    "csv line {}: no end timestamp, assuming instantaneous",
                    line + 2
                ));
                start
            }
        };
        let slot = *index.entry(case.clone()).or_insert_with(|| {
            by_case.push((case.clone(), Vec::new()));
            by_case.len() - 1
        });
        by_case[slot].1.push(RawEvent {
            case_id: case,
            activity,
            start_ms: start,
            end_ms: end,
        });
    }
    Ok(RawLog {
        cases: by_case,
        warnings,
    })
}

pub fn log_to_csv(cases: &[(String, Vec<RawEvent>)]) -> String {
    let mut out = String::from("case,activity,start,end\n");
    for (case, events) in cases {
        for e in events {
            out.push_str(&format!(
                "{},{},{},{}\n",
                case, e.activity, e.start_ms, e.end_ms
            ));
        }
    }
    out
}

// ------------------------------------------------------------- PNML subset

/// Reads the PNML subset: places (with `initialMarking`), transitions
/// (silent when the name is empty, `$invisible$`, `tau` or `τ`), and
/// arcs. PNML carries no final marking; pass one explicitly.
pub fn net_from_pnml(text: &str, final_marking: &[String]) -> Result<SystemNet, IoError> {
    use quick_xml::events::Event;
    use quick_xml::Reader;

    #[derive(Default)]
    struct PnmlNode {
        id: String,
        name: Option<String>,
        initial: bool,
    }

    let mut reader = Reader::from_str(text);
    reader.trim_text(true);
    let mut places: Vec<PnmlNode> = Vec::new();
    let mut transitions: Vec<PnmlNode> = Vec::new();
    let mut arcs: Vec<(String, String)> = Vec::new();
    // Stack of open elements; the innermost place/transition absorbs
    // name/initialMarking text.
    let mut stack: Vec<String> = Vec::new();
    let mut current: Option<(bool, PnmlNode)> = None; // (is_place, node)
    let mut buf = Vec::new();
    loop {
        let event = reader.read_event_into(&mut buf);
        match event {
            Ok(Event::Start(ref e)) | Ok(Event::Empty(ref e)) => {
                let self_closing = matches!(event, Ok(Event::Empty(_)));
                let tag = String::from_utf8_lossy(e.name().as_ref()).to_string();
                let attr = |key: &str| {
                    e.attributes().flatten().find_map(|a| {
                        (a.key.as_ref() == key.as_bytes())
                            .then(|| String::from_utf8_lossy(&a.value).to_string())
                    })
                };
                match tag.as_str() {
                    "place" | "transition" => {
                        let node = PnmlNode {
                            id: attr("id").unwrap_or_default(),
                            ..Default::default()
                        };
                        if self_closing {
                            if tag == "place" {
                                places.push(node);
                            } else {
                                transitions.push(node);
                            }
                        } else {
                            current = Some((tag == "place", node));
                        }
                    }
                    "arc" => {
                        let (Some(src), Some(dst)) = (attr("source"), attr("target")) else {
                            return Err(IoError::Xml("arc without source/target".into()));
                        };
                        arcs.push((src, dst));
                    }
                    _ => {}
                }
                if !self_closing {
                    stack.push(tag);
                }
            }
            Ok(Event::Text(t)) => {
                let text = t
                    .unescape()
                    .map_err(|e| IoError::Xml(e.to_string()))?
                    .to_string();
                let in_name = stack.iter().rev().take(3).any(|s| s == "name");
                let in_marking = stack.iter().rev().take(3).any(|s| s == "initialMarking");
                if let Some((_, node)) = current.as_mut() {
                    if in_name && stack.last().map(String::as_str) == Some("text") {
                        node.name = Some(text.clone());
                    }
                    if in_marking && stack.last().map(String::as_str) == Some("text") {
                        node.initial = text.trim().parse::<u64>().map(|n| n > 0).unwrap_or(false);
                    }
                }
            }
            Ok(Event::End(e)) => {
                let tag = String::from_utf8_lossy(e.name().as_ref()).to_string();
                while let Some(top) = stack.pop() {
                    if top == tag {
                        break;
                    }
                }
                if tag == "place" || tag == "transition" {
                    if let Some((is_place, node)) = current.take() {
                        if is_place {
                            places.push(node);
                        } else {
                            transitions.push(node);
                        }
                    }
                }
            }
            Ok(Event::Eof) => break,
            Err(e) => return Err(IoError::Xml(e.to_string())),
            _ => {}
        }
        buf.clear();
    }

    let silent = |name: &Option<String>| match name.as_deref().map(str::trim) {
        None | Some("") => true,
        Some(n) => n.eq_ignore_ascii_case("tau") || n == "τ" || n == "$invisible$",
    };
    let json = NetJson {
        places: places.iter().map(|p| p.id.clone()).collect(),
        transitions: transitions
            .iter()
            .map(|t| TransitionJson {
                id: t.id.clone(),
                label: if silent(&t.name) {
                    None
                } else {
                    t.name.clone()
                },
            })
            .collect(),
        arcs,
        m_init: places
            .iter()
            .filter(|p| p.initial)
            .map(|p| p.id.clone())
            .collect(),
        m_final: final_marking.to_vec(),
    };
    net_from_parts(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ptrace::derive_ptrace;

    #[test]
    fn net_json_round_trip() {
        let net = fixtures::fig2_net();
        let json = serde_json::to_string(&net_to_json(&net)).unwrap();
        let back = net_from_json(&json).unwrap();
        assert_eq!(net.n_places(), back.n_places());
        assert_eq!(net.n_transitions(), back.n_transitions());
        assert_eq!(net.m_init(), back.m_init());
        assert_eq!(net.m_final(), back.m_final());
        for t in net.transitions() {
            assert_eq!(net.pre_t(t), back.pre_t(t));
            assert_eq!(net.post_t(t), back.post_t(t));
        }
    }

    #[test]
    fn net_json_rejects_bad_arcs_and_markings() {
        let bad = r#"{"places":["p"],"transitions":[{"id":"t","label":"a"}],
                      "arcs":[["p","p"]],"m_init":["p"],"m_final":["p"]}"#;
        assert!(net_from_json(bad).is_err());
        let bad = r#"{"places":["p"],"transitions":[{"id":"t","label":"a"}],
                      "arcs":[["p","t"]],"m_init":["nope"],"m_final":["p"]}"#;
        assert!(net_from_json(bad).is_err());
    }

    #[test]
    fn trace_json_accepts_object_or_array_and_rfc3339() {
        let single = r#"{"case":"c1","events":[
            {"id":"e0","activity":"a","start":0,"end":1},
            {"activity":"b","start":"1970-01-01T00:00:00.002Z","end":"1970-01-01T00:00:00.003Z"}
        ]}"#;
        let log = log_from_json(single).unwrap();
        assert_eq!(log.cases.len(), 1);
        let trace = derive_ptrace(&log.cases[0].1).unwrap();
        assert_eq!(trace.order(), &[(0, 1)]);
        let array = format!("[{single}]");
        assert_eq!(log_from_json(&array).unwrap().cases.len(), 1);
    }

    #[test]
    fn missing_end_defaults_to_instantaneous_with_warning() {
        let text = r#"{"case":"c","events":[{"activity":"a","start":5}]}"#;
        let log = log_from_json(text).unwrap();
        assert_eq!(log.cases[0].1[0].end_ms, 5);
        assert_eq!(log.warnings.len(), 1);
    }

    #[test]
    fn csv_round_trip_groups_by_case() {
        let csv = "case,activity,start,end\n\
                   c1,a,0,1\n\
                   c2,x,0,9\n\
                   c1,b,2,3\n";
        let log = log_from_csv(csv).unwrap();
        assert_eq!(log.cases.len(), 2);
        assert_eq!(log.cases[0].0, "c1");
        assert_eq!(log.cases[0].1.len(), 2);
        let back = log_to_csv(&log.cases);
        let reparsed = log_from_csv(&back).unwrap();
        assert_eq!(reparsed.cases.len(), 2);
        assert_eq!(reparsed.cases[0].1.len(), 2);
    }

    #[test]
    fn pnml_subset_reader_builds_a_net() {
        let pnml = r#"<?xml version="1.0"?>
        <pnml><net id="n1"><page>
          <place id="p0"><initialMarking><text>1</text></initialMarking></place>
          <place id="p1"/>
          <transition id="t0"><name><text>a</text></name></transition>
          <transition id="t1"><name><text>$invisible$</text></name></transition>
          <arc id="a1" source="p0" target="t0"/>
          <arc id="a2" source="t0" target="p1"/>
          <arc id="a3" source="p1" target="t1"/>
          <arc id="a4" source="t1" target="p0"/>
        </page></net></pnml>"#;
        let net = net_from_pnml(pnml, &["p1".to_string()]).unwrap();
        assert_eq!(net.n_places(), 2);
        assert_eq!(net.n_transitions(), 2);
        assert_eq!(net.m_init().len(), 1);
        assert_eq!(net.label(crate::petri::TransId(0)).unwrap().as_ref(), "a");
        assert!(net.is_silent(crate::petri::TransId(1)));
        assert!(net.validate().is_empty());
    }
}
