//! Synthetic models and logs with controlled parallelism and noise, plus
//! the benchmark harness comparing the three engines.

use crate::align::{align_ptrace, AlignError, AlignOptions, Engine};
use crate::baseline::replay_occurrence;
use crate::dag;
use crate::petri::{PlaceId, SystemNet, TransId};
use crate::product::CostModel;
use crate::ptrace::{derive_ptrace, PTrace, RawEvent};
use crate::scalar::{format_cost, CostValue};
use crate::unfold::Budget;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::time::Instant;

/// Model generator knobs. `parallelism_pct` is the probability of placing
/// a parallel operator at each internal node of the random process tree.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub n_activities: usize,
    pub parallelism_pct: u8,
    pub seed: u64,
    pub no_loops: bool,
    pub no_duplicates: bool,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n_activities: 6,
            parallelism_pct: 0,
            seed: 1,
            no_loops: true,
            no_duplicates: true,
        }
    }
}

#[derive(Debug, Clone)]
enum TreeNode {
    Leaf(String),
    Seq(Vec<TreeNode>),
    Xor(Vec<TreeNode>),
    And(Vec<TreeNode>),
    Loop(Box<TreeNode>),
}

fn random_tree(labels: &[String], rng: &mut ChaCha8Rng, spec: &GenSpec) -> TreeNode {
    if labels.len() == 1 {
        return TreeNode::Leaf(labels[0].clone());
    }
    // Optional loop wrapper around a subtree.
    if !spec.no_loops && labels.len() >= 2 && rng.gen_bool(0.15) {
        return TreeNode::Loop(Box::new(random_tree(labels, rng, spec)));
    }
    let k = rng.gen_range(2..=labels.len().min(3));
    // Split the label list into k contiguous nonempty chunks.
    let mut cuts: Vec<usize> = (1..labels.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    cuts.push(labels.len());
    let mut children = Vec::new();
    let mut start = 0;
    for &end in &cuts {
        children.push(random_tree(&labels[start..end], rng, spec));
        start = end;
    }
    if rng.gen_range(0..100u8) < spec.parallelism_pct {
        TreeNode::And(children)
    } else if rng.gen_bool(0.5) {
        TreeNode::Seq(children)
    } else {
        TreeNode::Xor(children)
    }
}

struct Compiler {
    builder: crate::petri::NetBuilder,
    next_place: u32,
    next_tau: u32,
    next_trans: u32,
}

impl Compiler {
    fn fresh_place(&mut self) -> PlaceId {
        let p = self.builder.place(&format!("q{}", self.next_place));
        self.next_place += 1;
        p
    }

    fn compile(&mut self, node: &TreeNode, entry: PlaceId, exit: PlaceId) {
        match node {
            TreeNode::Leaf(a) => {
                let name = format!("t{}_{a}", self.next_trans);
                self.next_trans += 1;
                let t = self.builder.transition(&name, Some(a));
                self.builder.arc_pt(entry, t);
                self.builder.arc_tp(t, exit);
            }
            TreeNode::Seq(children) => {
                let mut cur = entry;
                for (i, c) in children.iter().enumerate() {
                    let next = if i + 1 == children.len() {
                        exit
                    } else {
                        self.fresh_place()
                    };
                    self.compile(c, cur, next);
                    cur = next;
                }
            }
            TreeNode::Xor(children) => {
                for c in children {
                    self.compile(c, entry, exit);
                }
            }
            TreeNode::And(children) => {
                let split = self.tau("split");
                let join = self.tau("join");
                self.builder.arc_pt(entry, split);
                self.builder.arc_tp(join, exit);
                for c in children {
                    let b_in = self.fresh_place();
                    let b_out = self.fresh_place();
                    self.builder.arc_tp(split, b_in);
                    self.builder.arc_pt(b_out, join);
                    self.compile(c, b_in, b_out);
                }
            }
            TreeNode::Loop(body) => {
                let mid = self.fresh_place();
                self.compile(body, entry, mid);
                let redo = self.tau("redo");
                let exit_t = self.tau("exit");
                self.builder.arc_pt(mid, redo);
                self.builder.arc_tp(redo, entry);
                self.builder.arc_pt(mid, exit_t);
                self.builder.arc_tp(exit_t, exit);
            }
        }
    }

    fn tau(&mut self, kind: &str) -> TransId {
        let name = format!("tau_{kind}_{}", self.next_tau);
        self.next_tau += 1;
        self.builder.transition(&name, None)
    }
}

/// Fuses away silent transitions with a single input and output place
/// where the input place has no other consumer and the output place no
/// other producer. The generated and/loop silents all have wider
/// environments, so this mainly normalizes imported models.
pub fn reduce_silent(net: &SystemNet) -> SystemNet {
    // Find one reducible τ; rebuild without it; repeat.
    let reducible = net.transitions().find(|&t| {
        net.is_silent(t)
            && net.pre_t(t).len() == 1
            && net.post_t(t).len() == 1
            && net.pre_t(t)[0] != net.post_t(t)[0]
            && net.consumers(net.pre_t(t)[0]).len() == 1
            && net.producers(net.post_t(t)[0]).len() == 1
            && !net.m_init().contains(net.post_t(t)[0])
            && !net.m_final().contains(net.pre_t(t)[0])
    });
    let Some(cut) = reducible else {
        return net.clone();
    };
    let keep_p = net.pre_t(cut)[0]; // survives; absorbs the postset place
    let drop_p = net.post_t(cut)[0];
    let mut b = SystemNet::builder();
    let mut place_of: HashMap<PlaceId, PlaceId> = HashMap::new();
    for p in net.places() {
        if p == drop_p {
            continue;
        }
        place_of.insert(p, b.place(net.place_name(p)));
    }
    place_of.insert(drop_p, place_of[&keep_p]);
    for t in net.transitions() {
        if t == cut {
            continue;
        }
        let label = net.label(t).map(|l| l.to_string());
        let nt = b.transition(net.trans_name(t), label.as_deref());
        for &p in net.pre_t(t) {
            b.arc_pt(place_of[&p], nt);
        }
        for &p in net.post_t(t) {
            b.arc_tp(nt, place_of[&p]);
        }
    }
    let init: Vec<PlaceId> = net.m_init().iter().map(|p| place_of[&p]).collect();
    let fin: Vec<PlaceId> = net.m_final().iter().map(|p| place_of[&p]).collect();
    b.initial(&init);
    b.final_marking(&fin);
    reduce_silent(&b.build())
}

/// Generates a block-structured 1-safe workflow net from a random process
/// tree over sequence, choice and parallel operators (and loops, when
/// allowed).
pub fn generate_model(spec: &GenSpec) -> SystemNet {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<String> = if spec.no_duplicates {
        (0..spec.n_activities).map(|i| format!("a{i}")).collect()
    } else {
        (0..spec.n_activities)
            .map(|_| format!("a{}", rng.gen_range(0..spec.n_activities.max(1))))
            .collect()
    };
    let tree = random_tree(&labels, &mut rng, spec);
    let mut compiler = Compiler {
        builder: SystemNet::builder(),
        next_place: 0,
        next_tau: 0,
        next_trans: 0,
    };
    let entry = compiler.builder.place("source");
    let exit = compiler.builder.place("sink");
    compiler.compile(&tree, entry, exit);
    compiler.builder.initial(&[entry]);
    compiler.builder.final_marking(&[exit]);
    let net = reduce_silent(&compiler.builder.build());
    debug_assert!(net.validate().is_empty());
    net
}

/// Simulates p-traces by random play of the net. Causally ordered firings
/// get disjoint intervals; concurrent firings get overlapping intervals
/// wherever an interval order can express it, so deriving the trace
/// recovers the run's concurrency.
pub fn simulate_log(net: &SystemNet, n_traces: usize, seed: u64) -> Vec<PTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_traces);
    for i in 0..n_traces {
        let mut attempts = 0;
        let seq = loop {
            if let Some(seq) = random_play(net, &mut rng, 400) {
                break seq;
            }
            attempts += 1;
            assert!(
                attempts < 1000,
                "net admits no complete run within bounds (not easy sound?)"
            );
        };
        let raw = sequence_to_raw_events(net, &seq, &format!("t{i}"));
        let mut trace = derive_ptrace(&raw).expect("simulated events are well-formed");
        trace.case_id = format!("t{i}");
        out.push(trace);
    }
    out
}

fn random_play(net: &SystemNet, rng: &mut ChaCha8Rng, max_steps: usize) -> Option<Vec<TransId>> {
    let mut m = net.m_init().clone();
    let mut seq = Vec::new();
    for _ in 0..max_steps {
        if m == *net.m_final() {
            return Some(seq);
        }
        let enabled = net.enabled(&m);
        if enabled.is_empty() {
            return None;
        }
        let t = enabled[rng.gen_range(0..enabled.len())];
        m = net.fire(&m, t).ok()?;
        seq.push(t);
    }
    None
}

/// Interval synthesis: earliest/latest chain depth over the run's causal
/// order on visible events; `[asap·K, alap·K + K−1]` preserves every
/// causal ordering and overlaps whatever slack allows.
fn sequence_to_raw_events(net: &SystemNet, seq: &[TransId], case: &str) -> Vec<RawEvent> {
    let (conditions, events) = replay_occurrence(net, seq).expect("replay of a valid play");
    let n = events.len();
    let mut edges = Vec::new();
    for c in &conditions {
        if let (Some(p), Some(q)) = (c.producer, c.consumer) {
            edges.push((p as u32, q as u32));
        }
    }
    let reach = dag::closure(n, &edges);
    let visible: Vec<usize> = (0..n)
        .filter(|&i| !net.is_silent(events[i].transition))
        .collect();
    let mut vis_edges: Vec<(u32, u32)> = Vec::new();
    for (vi, &u) in visible.iter().enumerate() {
        for (vj, &v) in visible.iter().enumerate() {
            if reach.get(u, v) {
                vis_edges.push((vi as u32, vj as u32));
            }
        }
    }
    let vn = visible.len();
    // Longest chain ending at / starting from each visible event.
    let order = dag::toposort(vn, &vis_edges).expect("run order is acyclic");
    let mut down = vec![1i64; vn];
    for &v in &order {
        for &(u, w) in &vis_edges {
            if w == v {
                down[v as usize] = down[v as usize].max(down[u as usize] + 1);
            }
        }
    }
    let mut up = vec![1i64; vn];
    for &v in order.iter().rev() {
        for &(u, w) in &vis_edges {
            if u == v {
                up[v as usize] = up[v as usize].max(up[w as usize] + 1);
            }
        }
    }
    let total = down
        .iter()
        .zip(&up)
        .map(|(d, u)| d + u - 1)
        .max()
        .unwrap_or(1);
    const K: i64 = 10;
    visible
        .iter()
        .enumerate()
        .map(|(vi, &e)| {
            let asap = down[vi] - 1;
            let alap = total - up[vi];
            RawEvent {
                case_id: case.to_string(),
                activity: net.label(events[e].transition).unwrap().to_string(),
                start_ms: asap * K,
                end_ms: alap * K + (K - 1),
            }
        })
        .collect()
}

/// Noise operators applied per trace with probability `noise_pct`.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub noise_pct: u8,
    pub seed: u64,
    /// Relative weights of remove / swap / insert.
    pub ops: (u32, u32, u32),
}

impl NoiseSpec {
    pub fn new(noise_pct: u8, seed: u64) -> Self {
        NoiseSpec {
            noise_pct,
            seed,
            ops: (1, 1, 1),
        }
    }
}

/// Mutates a log: each trace is noised with probability `noise_pct` by
/// removing an event, swapping the labels of an ordered pair, or
/// inserting an out-of-alphabet event. Outputs stay valid p-traces.
pub fn inject_noise(log: Vec<PTrace>, spec: &NoiseSpec) -> Vec<PTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    log.into_iter()
        .map(|trace| {
            if rng.gen_range(0..100) >= spec.noise_pct as u32 {
                return trace;
            }
            noise_one(&trace, &mut rng, spec.ops)
        })
        .collect()
}

fn noise_one(trace: &PTrace, rng: &mut ChaCha8Rng, ops: (u32, u32, u32)) -> PTrace {
    let total = ops.0 + ops.1 + ops.2;
    let mut pick = rng.gen_range(0..total.max(1));
    // remove_event (guarded against emptying the trace)
    if pick < ops.0 {
        if trace.n_events() >= 2 {
            let victim = rng.gen_range(0..trace.n_events() as u32);
            let keep: Vec<u32> = (0..trace.n_events() as u32)
                .filter(|&e| e != victim)
                .collect();
            let renum: HashMap<u32, u32> = keep
                .iter()
                .enumerate()
                .map(|(i, &e)| (e, i as u32))
                .collect();
            let closure = dag::closure_edges(trace.n_events(), trace.order());
            let edges: Vec<(u32, u32)> = closure
                .into_iter()
                .filter(|&(u, v)| u != victim && v != victim)
                .map(|(u, v)| (renum[&u], renum[&v]))
                .collect();
            let labels: Vec<String> = keep
                .iter()
                .map(|&e| trace.label(crate::ptrace::EventId(e)).to_string())
                .collect();
            return PTrace::from_parts(&trace.case_id, labels, edges)
                .expect("restriction of a partial order");
        }
        pick = ops.0; // fall through on degenerate traces
    }
    // swap_order: exchange labels across some dependency
    if pick < ops.0 + ops.1 {
        if !trace.order().is_empty() {
            let &(a, b) = &trace.order()[rng.gen_range(0..trace.order().len())];
            let mut labels: Vec<String> = trace.labels().to_vec();
            labels.swap(a as usize, b as usize);
            return PTrace::from_parts(&trace.case_id, labels, trace.order().to_vec())
                .expect("same order, swapped labels");
        }
    }
    // insert_alien_event, after a random event or concurrent to all
    let mut labels: Vec<String> = trace.labels().to_vec();
    let alien = format!("alien_{}", rng.gen_range(0..1000));
    labels.push(alien);
    let new_id = (labels.len() - 1) as u32;
    let mut edges = trace.order().to_vec();
    if rng.gen_bool(0.5) {
        let anchor = rng.gen_range(0..trace.n_events() as u32);
        edges.push((anchor, new_id));
    }
    PTrace::from_parts(&trace.case_id, labels, edges).expect("extension keeps the DAG")
}

/// One engine invocation on one trace.
#[derive(Debug, Clone)]
pub struct BenchRecord<C> {
    pub engine: Engine,
    pub parallelism: u8,
    pub noise: u8,
    pub trace: String,
    pub cost: Option<C>,
    pub wall_ms: f64,
    pub timed_out: bool,
    pub events: usize,
    pub queue_peak: usize,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_activities: usize,
    pub parallelism_levels: Vec<u8>,
    pub noise_levels: Vec<u8>,
    pub traces_per_log: usize,
    pub engines: Vec<Engine>,
    pub seed: u64,
    pub budget: Budget,
    pub single_thread: bool,
    pub no_loops: bool,
    pub no_duplicates: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n_activities: 6,
            parallelism_levels: vec![0, 30, 50, 70],
            noise_levels: vec![0, 10, 25, 50],
            traces_per_log: 50,
            engines: Engine::ALL.to_vec(),
            seed: 42,
            budget: Budget::default(),
            single_thread: false,
            no_loops: true,
            no_duplicates: true,
        }
    }
}

/// Runs the sweep: per parallelism level one model and one simulated log,
/// per noise level a mutated copy, per engine one record per trace.
/// Wall time wraps the engine call only.
pub fn run_bench<C: CostValue>(config: &BenchConfig, cm: &CostModel<C>) -> Vec<BenchRecord<C>> {
    let mut jobs: Vec<(Engine, u8, u8, SystemNet, PTrace)> = Vec::new();
    for &p in &config.parallelism_levels {
        let model = generate_model(&GenSpec {
            n_activities: config.n_activities,
            parallelism_pct: p,
            seed: config.seed ^ (p as u64) << 8,
            no_loops: config.no_loops,
            no_duplicates: config.no_duplicates,
        });
        let log = simulate_log(
            &model,
            config.traces_per_log,
            config.seed ^ 0x51_f0 ^ p as u64,
        );
        for &n in &config.noise_levels {
            let noisy = inject_noise(
                log.clone(),
                &NoiseSpec::new(n, config.seed ^ 0xa0_17 ^ n as u64),
            );
            for &engine in &config.engines {
                for trace in &noisy {
                    jobs.push((engine, p, n, model.clone(), trace.clone()));
                }
            }
        }
    }
    let run_one = |(engine, p, n, model, trace): &(Engine, u8, u8, SystemNet, PTrace)| {
        let opts = AlignOptions {
            engine: *engine,
            budget: config.budget.clone(),
            ..Default::default()
        };
        let started = Instant::now();
        let result = align_ptrace(model, trace, cm, &opts);
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        match result {
            Ok(a) => BenchRecord {
                engine: *engine,
                parallelism: *p,
                noise: *n,
                trace: trace.case_id.clone(),
                cost: Some(a.cost),
                wall_ms,
                timed_out: false,
                events: a.stats.events,
                queue_peak: a.stats.queue_peak,
            },
            Err(AlignError::Timeout) => BenchRecord {
                engine: *engine,
                parallelism: *p,
                noise: *n,
                trace: trace.case_id.clone(),
                cost: None,
                wall_ms,
                timed_out: true,
                events: 0,
                queue_peak: 0,
            },
            Err(e) => panic!("bench alignment failed on generated data: {e}"),
        }
    };
    if config.single_thread {
        jobs.iter().map(run_one).collect()
    } else {
        use rayon::prelude::*;
        let threads = std::env::var("UNFOLD_ALIGN_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .expect("worker pool");
        pool.install(|| jobs.par_iter().map(run_one).collect())
    }
}

/// Aggregate per (parallelism, noise, engine).
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub parallelism: u8,
    pub noise: u8,
    pub engine: Engine,
    pub n: usize,
    pub mean_wall_ms: f64,
    pub median_wall_ms: f64,
    pub pct_aligned: f64,
}

pub fn summarize<C: CostValue>(records: &[BenchRecord<C>]) -> Vec<SummaryRow> {
    let mut groups: HashMap<(u8, u8, &'static str), Vec<&BenchRecord<C>>> = HashMap::new();
    for r in records {
        groups
            .entry((r.parallelism, r.noise, r.engine.name()))
            .or_default()
            .push(r);
    }
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort();
    keys.iter()
        .map(|&(p, n, engine)| {
            let rs = &groups[&(p, n, engine)];
            let mut walls: Vec<f64> = rs.iter().map(|r| r.wall_ms).collect();
            walls.sort_by(|a, b| a.total_cmp(b));
            let mean = walls.iter().sum::<f64>() / walls.len() as f64;
            let median = walls[walls.len() / 2];
            let aligned = rs.iter().filter(|r| !r.timed_out).count();
            SummaryRow {
                parallelism: p,
                noise: n,
                engine: engine.parse().unwrap(),
                n: rs.len(),
                mean_wall_ms: mean,
                median_wall_ms: median,
                pct_aligned: 100.0 * aligned as f64 / rs.len() as f64,
            }
        })
        .collect()
}

pub fn write_bench_csv<C: CostValue>(
    records: &[BenchRecord<C>],
    mut w: impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(
        w,
        "engine,parallelism,noise,trace,cost,wall_ms,timed_out,events,queue_peak"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{:.3},{},{},{}",
            r.engine,
            r.parallelism,
            r.noise,
            r.trace,
            r.cost.as_ref().map(format_cost).unwrap_or_default(),
            r.wall_ms,
            r.timed_out,
            r.events,
            r.queue_peak
        )?;
    }
    Ok(())
}

pub fn write_summary_csv(rows: &[SummaryRow], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(
        w,
        "parallelism,noise,engine,n,mean_wall_ms,median_wall_ms,pct_aligned"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.3},{:.3},{:.1}",
            r.parallelism, r.noise, r.engine, r.n, r.mean_wall_ms, r.median_wall_ms, r.pct_aligned
        )?;
    }
    Ok(())
}

/// Per-engine regression input: x = noise, y = mean wall ms, one file
/// section per parallelism level.
pub fn write_plot_csv(rows: &[SummaryRow], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "parallelism,engine,noise,mean_wall_ms")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.3}",
            r.parallelism, r.engine, r.noise, r.mean_wall_ms
        )?;
    }
    Ok(())
}
