//! End-to-end command-line behavior: exit codes, file outputs, format
//! conversions and the frozen golden files for the running example.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_unfold-align")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(exe()).args(args).output().expect("spawn CLI")
}

#[test]
fn align_fig5_matches_the_golden_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "align",
        "--model",
        fixtures().join("fig5_model.json").to_str().unwrap(),
        "--log",
        fixtures().join("fig5_trace.json").to_str().unwrap(),
        "--svg",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("aligned 1 variants, mean cost 3.0001, timeouts 0"),
        "summary line off: {stdout}"
    );
    let report = fs::read(out.join("variant_000.json")).unwrap();
    let expected = fs::read(golden("fig5_report.json")).unwrap();
    assert_eq!(
        report, expected,
        "report drifted from the frozen golden file"
    );
    let svg = fs::read(out.join("variant_000.svg")).unwrap();
    let expected = fs::read(golden("fig6_ua.svg")).unwrap();
    assert_eq!(svg, expected, "SVG drifted from the frozen golden file");
}

#[test]
fn prefix_dump_writes_dot_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "align",
        "--model",
        fixtures().join("fig5_model.json").to_str().unwrap(),
        "--log",
        fixtures().join("fig5_trace.json").to_str().unwrap(),
        "--prefix-dump",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let dot = fs::read_to_string(out.join("variant_000.prefix.dot")).unwrap();
    assert!(dot.contains("digraph prefix"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("variant_000.prefix.json")).unwrap())
            .unwrap();
    assert!(json["events"].as_array().unwrap().len() >= 7); // 6 moves + target
    assert!(json["conditions"].as_array().is_some());
}

#[test]
fn align_csv_log_gives_the_same_cost() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "align",
        "--model",
        fixtures().join("fig5_model.json").to_str().unwrap(),
        "--log",
        fixtures().join("fig5_trace.csv").to_str().unwrap(),
        "--engine",
        "classic-pa",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("variant_000.json")).unwrap()).unwrap();
    assert_eq!(report["cost"], "3.0001");
    assert_eq!(report["engine"], "classic-pa");
}

#[test]
fn malformed_input_exits_one_with_context() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("broken.json");
    fs::write(&bad, "{ not json").unwrap();
    let output = run(&[
        "align",
        "--model",
        bad.to_str().unwrap(),
        "--log",
        fixtures().join("fig5_trace.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error:"), "stderr should explain: {stderr}");
    assert!(
        stderr.contains("broken.json"),
        "error should carry the file position context"
    );
}

#[test]
fn timeout_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let output = run(&[
        "align",
        "--model",
        fixtures().join("fig5_model.json").to_str().unwrap(),
        "--log",
        fixtures().join("fig5_trace.json").to_str().unwrap(),
        "--budget-ms",
        "0",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("timeouts 1"),
        "summary should count the timeout: {stdout}"
    );
}

#[test]
fn cost_overrides_change_the_reported_cost() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "align",
        "--model",
        fixtures().join("fig5_model.json").to_str().unwrap(),
        "--log",
        fixtures().join("fig5_trace.json").to_str().unwrap(),
        "--log-cost",
        "2",
        "--tau-cost",
        "1/8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("variant_000.json")).unwrap()).unwrap();
    // 2 log moves at 2, model f at 1, τ at 1/8.
    assert_eq!(report["cost"], "5.125");

    // An invalid model (τ dearer than moves) is an input error.
    let output = run(&[
        "align",
        "--model",
        fixtures().join("fig5_model.json").to_str().unwrap(),
        "--log",
        fixtures().join("fig5_trace.json").to_str().unwrap(),
        "--tau-cost",
        "5",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn variant_grouping_aligns_isomorphic_traces_once() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log.json");
    // Three cases: two isomorphic (shifted timestamps), one different.
    fs::write(
        &log,
        r#"[
          {"case":"x1","events":[{"activity":"b","start":0,"end":1},{"activity":"c","start":2,"end":3}]},
          {"case":"x2","events":[{"activity":"b","start":100,"end":101},{"activity":"c","start":110,"end":113}]},
          {"case":"y","events":[{"activity":"b","start":0,"end":9},{"activity":"c","start":2,"end":13}]}
        ]"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "align",
        "--model",
        fixtures().join("fig5_model.json").to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("aligned 2 variants"),
        "two variants expected: {stdout}"
    );
    let first: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("variant_000.json")).unwrap()).unwrap();
    assert_eq!(first["cases"], serde_json::json!(["x1", "x2"]));
}

#[test]
fn diagnose_renders_the_deviation_table() {
    let output = run(&["diagnose", golden("fig5_report.json").to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    // Default hides the τ row: 3 event rows + 6 dependency rows.
    assert_eq!(stdout.matches("EVENT").count(), 3);
    assert_eq!(stdout.matches("DEP").count(), 6);
    assert!(stdout.contains("b → c"));

    let output = run(&[
        "diagnose",
        golden("fig5_report.json").to_str().unwrap(),
        "--include-tau",
    ]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.matches("EVENT").count(), 4);
    assert!(stdout.contains("τ"));
}

#[test]
fn diagnose_conforming_report() {
    let tmp = tempfile::tempdir().unwrap();
    let model = tmp.path().join("model.json");
    fs::write(
        &model,
        r#"{"places":["s","t"],"transitions":[{"id":"ta","label":"a"}],
            "arcs":[["s","ta"],["ta","t"]],"m_init":["s"],"m_final":["t"]}"#,
    )
    .unwrap();
    let log = tmp.path().join("log.json");
    fs::write(
        &log,
        r#"{"case":"c","events":[{"activity":"a","start":0,"end":1}]}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let run1 = run(&[
        "align",
        "--model",
        model.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run1.status.code(), Some(0));
    let output = run(&["diagnose", out.join("variant_000.json").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&output.stdout).contains("conforming"));
}

#[test]
fn convert_round_trips_between_csv_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let json = tmp.path().join("trace.json");
    let csv = tmp.path().join("trace.csv");
    let status = run(&[
        "convert",
        "trace-csv",
        fixtures().join("fig5_trace.csv").to_str().unwrap(),
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed[0]["case"], "fig5");
    assert_eq!(parsed[0]["events"].as_array().unwrap().len(), 4);

    let status = run(&[
        "convert",
        "trace-json",
        json.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("case,activity,start,end"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn convert_pnml_to_net_json() {
    let tmp = tempfile::tempdir().unwrap();
    let pnml = tmp.path().join("model.pnml");
    fs::write(
        &pnml,
        r#"<?xml version="1.0"?><pnml><net id="n"><page>
            <place id="p0"><initialMarking><text>1</text></initialMarking></place>
            <place id="p1"/>
            <transition id="t0"><name><text>a</text></name></transition>
            <arc id="a0" source="p0" target="t0"/>
            <arc id="a1" source="t0" target="p1"/>
        </page></net></pnml>"#,
    )
    .unwrap();
    let out = tmp.path().join("model.json");
    let status = run(&[
        "convert",
        "pnml",
        pnml.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--final-marking",
        "p1",
    ]);
    assert_eq!(status.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(parsed["m_init"], serde_json::json!(["p0"]));
    assert_eq!(parsed["m_final"], serde_json::json!(["p1"]));

    // The converted model aligns like any other.
    let outdir = tmp.path().join("out");
    let log = tmp.path().join("log.json");
    fs::write(
        &log,
        r#"{"case":"c","events":[{"activity":"a","start":0,"end":1}]}"#,
    )
    .unwrap();
    let run2 = run(&[
        "align",
        "--model",
        out.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert_eq!(run2.status.code(), Some(0));
}

#[test]
fn bench_smoke_preset_finishes_quickly_and_writes_csvs() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench");
    let output = run(&[
        "bench",
        "--parallelism",
        "70",
        "--noise",
        "25",
        "--traces",
        "5",
        "--engines",
        "all",
        "--seed",
        "7",
        "--plot-data",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let bench = fs::read_to_string(out.join("bench.csv")).unwrap();
    assert!(bench
        .starts_with("engine,parallelism,noise,trace,cost,wall_ms,timed_out,events,queue_peak"));
    assert_eq!(bench.lines().count(), 1 + 3 * 5);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3);
    assert!(out.join("plotdata.csv").exists());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.matches("parallelism  70%").count(), 3);

    // Same seed twice: identical cost columns.
    let out2 = tmp.path().join("bench2");
    let rerun = run(&[
        "bench",
        "--parallelism",
        "70",
        "--noise",
        "25",
        "--traces",
        "5",
        "--engines",
        "all",
        "--seed",
        "7",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(rerun.status.code(), Some(0));
    let cols = |text: &str| -> Vec<String> {
        text.lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{},{}", f[0], f[1], f[2], f[3], f[4])
            })
            .collect()
    };
    let again = fs::read_to_string(out2.join("bench.csv")).unwrap();
    assert_eq!(cols(&bench), cols(&again));
    assert!(
        started.elapsed().as_secs() < 120,
        "smoke preset must stay far under two minutes"
    );
}
