//! Command-line interface: align, diagnose, bench and convert.

use crate::align::{align_ptrace, AlignError, AlignOptions, Engine};
use crate::bench::{
    run_bench, summarize, write_bench_csv, write_plot_csv, write_summary_csv, BenchConfig,
};
use crate::dag::group_isomorphic;
use crate::io;
use crate::product::CostModel;
use crate::ptrace::{derive_ptrace, PTrace};
use crate::report::Report;
use crate::scalar::parse_cost;
use crate::unfold::Budget;
use crate::viz::{order_to_dot, render_svg};
use crate::Cost;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "unfold-align",
    about = "Partially-ordered conformance alignments via Petri net unfolding",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align an event log against a model and write per-variant reports.
    Align(AlignArgs),
    /// Render the deviation table of a report file.
    Diagnose(DiagnoseArgs),
    /// Run the parallelism/noise benchmark sweep.
    Bench(BenchArgs),
    /// Convert between file formats.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Model file: net JSON, or PNML (*.pnml).
    #[arg(long)]
    pub model: PathBuf,
    /// Log file: p-trace JSON (object or array), or CSV (*.csv).
    #[arg(long)]
    pub log: PathBuf,
    /// Final marking for PNML models (comma-separated place ids);
    /// defaults to a `<model>.final.json` sidecar when present.
    #[arg(long)]
    pub final_marking: Option<String>,
    #[arg(long, default_value = "unfold-heuristic")]
    pub engine: Engine,
    /// Collect all optimal runs instead of stopping at the first.
    #[arg(long)]
    pub all_optimal: bool,
    /// Per-variant budget in milliseconds.
    #[arg(long, default_value_t = 3000)]
    pub budget_ms: u64,
    #[arg(long)]
    pub log_cost: Option<String>,
    #[arg(long)]
    pub model_cost: Option<String>,
    #[arg(long)]
    pub tau_cost: Option<String>,
    /// Count silent model moves as undesired events in summaries.
    #[arg(long)]
    pub include_tau: bool,
    /// Output directory for reports (and SVG/DOT when requested).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write a chevron SVG per variant.
    #[arg(long)]
    pub svg: bool,
    /// Also write the alignment order as DOT per variant.
    #[arg(long)]
    pub dot: bool,
    /// Also dump the finished prefix (DOT + JSON) per variant; applies to
    /// the unfolding engines only.
    #[arg(long)]
    pub prefix_dump: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Report JSON produced by `align`.
    pub report: PathBuf,
    /// Show silent model moves among the undesired events.
    #[arg(long)]
    pub include_tau: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 6)]
    pub activities: usize,
    /// Comma-separated parallelism percentages.
    #[arg(long, default_value = "0,30,50,70", value_delimiter = ',')]
    pub parallelism: Vec<u8>,
    /// Comma-separated noise percentages.
    #[arg(long, default_value = "0,10,25,50", value_delimiter = ',')]
    pub noise: Vec<u8>,
    #[arg(long, default_value_t = 50)]
    pub traces: usize,
    /// Engines to compare; `all` expands to the three known ones.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    pub engines: Vec<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Per-trace budget in milliseconds.
    #[arg(long, default_value_t = 3000)]
    pub budget_ms: u64,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    /// Disable trace-level parallelism for stable timings.
    #[arg(long)]
    pub single_thread: bool,
    /// Also write regression-line plot data.
    #[arg(long)]
    pub plot_data: bool,
    /// Allow loop operators in generated models.
    #[arg(long)]
    pub allow_loops: bool,
    /// Allow duplicate activity labels in generated models.
    #[arg(long)]
    pub allow_duplicates: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(subcommand)]
    pub what: ConvertCommand,
}

#[derive(Debug, Subcommand)]
pub enum ConvertCommand {
    /// Trace CSV → p-trace JSON.
    TraceCsv {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// P-trace JSON → trace CSV.
    TraceJson {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PNML → net JSON (final marking required, PNML does not carry one).
    Pnml {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated place ids of the final marking.
        #[arg(long, value_delimiter = ',')]
        final_marking: Vec<String>,
    },
}

/// Runs a parsed command line; returns the process exit code
/// (0 success, 1 input error, 2 completed with timeouts).
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Align(args) => cmd_align(args),
        Command::Diagnose(args) => cmd_diagnose(args).map(|()| 0),
        Command::Bench(args) => cmd_bench(args).map(|()| 0),
        Command::Convert(args) => cmd_convert(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path, final_marking: &Option<String>) -> Result<crate::petri::SystemNet> {
    let text = read(path)?;
    let is_pnml = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("pnml"))
        .unwrap_or(false);
    let net = if is_pnml {
        let fin: Vec<String> = match final_marking {
            Some(s) => s.split(',').map(|p| p.trim().to_string()).collect(),
            None => {
                let sidecar = path.with_extension("final.json");
                let text = read(&sidecar).context(
                    "PNML has no final marking; pass --final-marking or provide a \
                     `<model>.final.json` sidecar with a JSON list of place ids",
                )?;
                serde_json::from_str(&text).context("parsing final-marking sidecar")?
            }
        };
        io::net_from_pnml(&text, &fin)?
    } else {
        io::net_from_json(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    let violations = net.validate();
    if !violations.is_empty() {
        bail!("model is not well-formed: {violations:?}");
    }
    Ok(net)
}

fn load_log(path: &Path) -> Result<Vec<PTrace>> {
    let text = read(path)?;
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    let raw = if is_csv {
        io::log_from_csv(&text)?
    } else {
        io::log_from_json(&text)?
    };
    for w in &raw.warnings {
        eprintln!("warning: {w}");
    }
    raw.cases
        .iter()
        .map(|(case, events)| {
            derive_ptrace(events).with_context(|| format!("deriving p-trace for case {case}"))
        })
        .collect()
}

fn cost_model(args: &AlignArgs) -> Result<CostModel<Cost>> {
    let mut cm = CostModel::<Cost>::default();
    if let Some(s) = &args.log_cost {
        cm.log_cost = parse_cost(s).map_err(anyhow::Error::msg)?;
    }
    if let Some(s) = &args.model_cost {
        cm.model_cost = parse_cost(s).map_err(anyhow::Error::msg)?;
    }
    if let Some(s) = &args.tau_cost {
        cm.tau_cost = parse_cost(s).map_err(anyhow::Error::msg)?;
    }
    cm.validate()
        .map_err(|e| anyhow::anyhow!("invalid cost model: {e}"))?;
    Ok(cm)
}

fn cmd_align(args: AlignArgs) -> Result<i32> {
    let model = load_model(&args.model, &args.final_marking)?;
    let traces = load_log(&args.log)?;
    if traces.is_empty() {
        bail!("log contains no traces");
    }
    let cm = cost_model(&args)?;
    let opts = AlignOptions {
        engine: args.engine,
        budget: Budget::timeout_ms(args.budget_ms),
        include_tau: args.include_tau,
        all_optimal: args.all_optimal,
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    // Variant grouping: isomorphic p-traces share one alignment.
    let groups = group_isomorphic(&traces, |t| t.to_dag());
    let worker_cap = std::env::var("UNFOLD_ALIGN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_cap.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    use rayon::prelude::*;
    let results: Vec<(Vec<String>, Result<Report, AlignError>)> = pool.install(|| {
        groups
            .par_iter()
            .map(|members| {
                let mut cases: Vec<String> =
                    members.iter().map(|&i| traces[i].case_id.clone()).collect();
                cases.sort();
                let rep = &traces[members[0]];
                let result = align_ptrace(&model, rep, &cm, &opts)
                    .map(|a| Report::build(cases.clone(), &a, args.include_tau));
                (cases, result)
            })
            .collect()
    });

    let mut timeouts = 0usize;
    let mut aligned = 0usize;
    let mut cost_sum = 0f64;
    for (vi, (cases, result)) in results.iter().enumerate() {
        match result {
            Ok(report) => {
                aligned += 1;
                cost_sum += report.cost_value;
                let base = args.out.join(format!("variant_{vi:03}"));
                fs::write(base.with_extension("json"), report.to_json_pretty())?;
                if args.svg || args.dot {
                    let a = align_ptrace(&model, &traces[groups[vi][0]], &cm, &opts)
                        .expect("variant aligned a moment ago");
                    if args.svg {
                        fs::write(base.with_extension("svg"), render_svg(&a.ua))?;
                    }
                    if args.dot {
                        fs::write(base.with_extension("dot"), order_to_dot(&a.order))?;
                    }
                }
                if args.prefix_dump && args.engine != Engine::ClassicPa {
                    let spn = crate::product::extended_product(&traces[groups[vi][0]], &model);
                    let order = match args.engine {
                        Engine::UnfoldCost => crate::unfold::OrderKind::Cost,
                        _ => crate::unfold::OrderKind::Heuristic,
                    };
                    let uopts = crate::unfold::UnfoldOptions {
                        order,
                        stop_at_first: !args.all_optimal,
                        early_exit: true,
                        budget: Budget::timeout_ms(args.budget_ms),
                    };
                    if let Ok(out) = crate::unfold::unfold(&spn, &cm, &uopts) {
                        fs::write(
                            base.with_extension("prefix.dot"),
                            out.prefix.to_dot(&spn.net),
                        )?;
                        fs::write(
                            base.with_extension("prefix.json"),
                            serde_json::to_string_pretty(&out.prefix.to_json(&spn.net))? + "\n",
                        )?;
                    }
                }
            }
            Err(AlignError::Timeout) => {
                timeouts += 1;
                eprintln!("variant {vi} (cases {cases:?}): timed out");
            }
            Err(e) => bail!("variant {vi} (cases {cases:?}): {e}"),
        }
    }
    let mean = if aligned > 0 {
        cost_sum / aligned as f64
    } else {
        0.0
    };
    println!("aligned {aligned} variants, mean cost {mean}, timeouts {timeouts}");
    Ok(if timeouts > 0 { 2 } else { 0 })
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let text = read(&args.report)?;
    let report: Report = serde_json::from_str(&text)
        .with_context(|| format!("parsing report {}", args.report.display()))?;
    print!("{}", report.render_diagnosis(args.include_tau));
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let engines: Vec<Engine> = if args.engines.iter().any(|e| e == "all") {
        Engine::ALL.to_vec()
    } else {
        args.engines
            .iter()
            .map(|e| e.parse().map_err(anyhow::Error::msg))
            .collect::<Result<_>>()?
    };
    let config = BenchConfig {
        n_activities: args.activities,
        parallelism_levels: args.parallelism.clone(),
        noise_levels: args.noise.clone(),
        traces_per_log: args.traces,
        engines,
        seed: args.seed,
        budget: Budget::timeout_ms(args.budget_ms),
        single_thread: args.single_thread,
        no_loops: !args.allow_loops,
        no_duplicates: !args.allow_duplicates,
    };
    let cm = CostModel::<Cost>::default();
    let records = run_bench(&config, &cm);
    let summary = summarize(&records);
    fs::create_dir_all(&args.out)?;
    let mut bench_csv = Vec::new();
    write_bench_csv(&records, &mut bench_csv)?;
    fs::write(args.out.join("bench.csv"), bench_csv)?;
    let mut summary_csv = Vec::new();
    write_summary_csv(&summary, &mut summary_csv)?;
    fs::write(args.out.join("summary.csv"), summary_csv)?;
    if args.plot_data {
        let mut plot_csv = Vec::new();
        write_plot_csv(&summary, &mut plot_csv)?;
        fs::write(args.out.join("plotdata.csv"), plot_csv)?;
    }
    for row in &summary {
        println!(
            "parallelism {:>3}% noise {:>3}% {:<17} mean {:>9.2} ms  aligned {:>5.1}%",
            row.parallelism, row.noise, row.engine, row.mean_wall_ms, row.pct_aligned
        );
    }
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<()> {
    match args.what {
        ConvertCommand::TraceCsv { input, out } => {
            let raw = io::log_from_csv(&read(&input)?)?;
            for w in &raw.warnings {
                eprintln!("warning: {w}");
            }
            fs::write(&out, io::log_to_json(&raw.cases))?;
        }
        ConvertCommand::TraceJson { input, out } => {
            let raw = io::log_from_json(&read(&input)?)?;
            for w in &raw.warnings {
                eprintln!("warning: {w}");
            }
            fs::write(&out, io::log_to_csv(&raw.cases))?;
        }
        ConvertCommand::Pnml {
            input,
            out,
            final_marking,
        } => {
            let net = io::net_from_pnml(&read(&input)?, &final_marking)?;
            let json = serde_json::to_string_pretty(&io::net_to_json(&net))? + "\n";
            fs::write(&out, json)?;
        }
    }
    Ok(())
}
