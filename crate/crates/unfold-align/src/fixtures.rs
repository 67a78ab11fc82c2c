//! Hand-built example instances: small nets and p-traces with known
//! optimal alignment costs. Used by the test suites and handy as demo
//! input.

use crate::petri::{quick_net, SystemNet};
use crate::ptrace::{derive_ptrace, PTrace, RawEvent};
use crate::scalar::CostValue;
use crate::Rational;

fn ev(case: &str, activity: &str, start: i64, end: i64) -> RawEvent {
    RawEvent {
        case_id: case.into(),
        activity: activity.into(),
        start_ms: start,
        end_ms: end,
    }
}

/// Builds a p-trace from `(activity, start, end)` triples.
pub fn trace(case: &str, events: &[(&str, i64, i64)]) -> PTrace {
    let raw: Vec<RawEvent> = events.iter().map(|&(a, s, e)| ev(case, a, s, e)).collect();
    derive_ptrace(&raw).expect("fixture trace is valid")
}

/// The two-transition net with a shared regenerated place: `x` and `y`
/// conflict on `c`, yet each can still fire after the other, giving a
/// branching process with two complete runs.
pub fn fig2_net() -> SystemNet {
    quick_net(
        &["a", "b", "c", "d", "e"],
        &[
            ("x", Some("x"), &["a", "c"], &["d", "c"]),
            ("y", Some("y"), &["b", "c"], &["e", "c"]),
        ],
        &["a", "b", "c"],
        &["d", "c", "e"],
    )
}

/// A software development management process: 11 places, 12 transitions,
/// with a parallel block, an exclusive choice, and a rework loop.
pub fn fig1_mgmt_net() -> SystemNet {
    quick_net(
        &[
            "p0", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "p9", "p10",
        ],
        &[
            ("cb", Some("cb"), &["p0"], &["p1"]),
            ("fork", None, &["p1"], &["p2", "p3"]),
            ("sa", Some("sa"), &["p2"], &["p4"]),
            ("im", Some("im"), &["p4"], &["p6"]),
            ("td", Some("td"), &["p3"], &["p5"]),
            ("ts", Some("ts"), &["p5"], &["p7"]),
            ("join", None, &["p6", "p7"], &["p8"]),
            ("rv", Some("rv"), &["p8"], &["p9"]),
            ("rw", Some("rw"), &["p8"], &["p9"]),
            ("fx", Some("fx"), &["p9"], &["p8"]),
            ("dp", Some("dp"), &["p9"], &["p10"]),
            ("rl", Some("rl"), &["p9"], &["p10"]),
        ],
        &["p0"],
        &["p10"],
    )
}

/// The running example: model net `b; τ; (c ∥ f)` and the p-trace
/// `b ≺ {c, d, e}`. Its optimal alignment synchronizes on `b` and `c`,
/// logs `d`, `e` as moves on log only, and needs model moves `τ` and `f`.
pub fn fig5_instance() -> (SystemNet, PTrace) {
    let model = quick_net(
        &["p0", "p1", "p2", "p3", "p4", "p5"],
        &[
            ("tb", Some("b"), &["p0"], &["p1"]),
            ("tau", None, &["p1"], &["p2", "p3"]),
            ("tc", Some("c"), &["p2"], &["p4"]),
            ("tf", Some("f"), &["p3"], &["p5"]),
        ],
        &["p0"],
        &["p4", "p5"],
    );
    let t = trace(
        "fig5",
        &[("b", 0, 1), ("c", 2, 3), ("d", 2, 3), ("e", 2, 3)],
    );
    (model, t)
}

/// One corpus instance: a model, a p-trace and, where hand-computed, the
/// optimal alignment cost under the default cost model.
pub struct Fixture {
    pub name: &'static str,
    pub model: SystemNet,
    pub trace: PTrace,
    pub expected_cost: Option<Rational>,
}

fn tau(n: i64) -> Rational {
    Rational::ratio(n, 10_000)
}

fn whole(n: i64) -> Rational {
    Rational::ratio(n, 1)
}

/// A τ-free net of `k` independent branches, one per listed activity.
fn parallel_net(activities: &[&str]) -> SystemNet {
    let mut b = SystemNet::builder();
    let mut init = Vec::new();
    let mut fin = Vec::new();
    for a in activities {
        let p = b.place(&format!("in_{a}"));
        let q = b.place(&format!("out_{a}"));
        let t = b.transition(&format!("t_{a}"), Some(a));
        b.arc_pt(p, t);
        b.arc_tp(t, q);
        init.push(p);
        fin.push(q);
    }
    b.initial(&init);
    b.final_marking(&fin);
    b.build()
}

fn chain_net(activities: &[&str]) -> SystemNet {
    let mut b = SystemNet::builder();
    let mut prev = b.place("s0");
    let init = prev;
    for (i, a) in activities.iter().enumerate() {
        let next = b.place(&format!("s{}", i + 1));
        let t = b.transition(&format!("t{i}_{a}"), Some(a));
        b.arc_pt(prev, t);
        b.arc_tp(t, next);
        prev = next;
    }
    b.initial(&[init]);
    b.final_marking(&[prev]);
    b.build()
}

/// `a` guarded by a τ loop: fire `a`, optionally loop back, exit silently.
fn loop_net() -> SystemNet {
    quick_net(
        &["p0", "p1", "p2"],
        &[
            ("ta", Some("a"), &["p0"], &["p1"]),
            ("redo", None, &["p1"], &["p0"]),
            ("exit", None, &["p1"], &["p2"]),
        ],
        &["p0"],
        &["p2"],
    )
}

/// The shipped instance corpus. Every entry is alignable; expected costs
/// are stated where they were derived by hand.
pub fn corpus() -> Vec<Fixture> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, model: SystemNet, trace: PTrace, cost: Option<Rational>| {
        out.push(Fixture {
            name,
            model,
            trace,
            expected_cost: cost,
        });
    };

    let (fig5_model, fig5_trace) = fig5_instance();
    push(
        "fig5",
        fig5_model,
        fig5_trace,
        Some(whole(2) + whole(1) + tau(1)),
    );

    push(
        "fig1-two-branch",
        fig1_mgmt_net(),
        trace(
            "c2",
            &[
                ("cb", 0, 1),
                ("sa", 2, 3),
                ("td", 2, 3),
                ("im", 4, 5),
                ("ts", 4, 5),
                ("rv", 6, 7),
                ("dp", 8, 9),
            ],
        ),
        Some(tau(2)), // fork and join are silent moves
    );

    push(
        "fig2-fit",
        fig2_net(),
        trace("c3", &[("x", 0, 1), ("y", 2, 3)]),
        Some(whole(0)),
    );

    push(
        "single-sync",
        chain_net(&["a"]),
        trace("c4", &[("a", 0, 1)]),
        Some(whole(0)),
    );

    push(
        "tau-only-model",
        quick_net(&["p", "q"], &[("t", None, &["p"], &["q"])], &["p"], &["q"]),
        trace("c5", &[("a", 0, 1)]),
        Some(whole(1) + tau(1)),
    );

    push(
        "order-dev-zero",
        parallel_net(&["a", "b"]),
        trace("c6", &[("a", 0, 1), ("b", 2, 3)]),
        Some(whole(0)),
    );

    push(
        "reversed-pair",
        chain_net(&["b", "a"]),
        trace("c7", &[("a", 0, 1), ("b", 2, 3)]),
        Some(whole(2)),
    );

    push(
        "parallel-2-fit",
        parallel_net(&["a", "b"]),
        trace("c8", &[("a", 0, 5), ("b", 0, 5)]),
        Some(whole(0)),
    );

    push(
        "parallel-3-fit",
        parallel_net(&["a", "b", "c"]),
        trace("c9", &[("a", 0, 5), ("b", 0, 5), ("c", 0, 5)]),
        Some(whole(0)),
    );

    push(
        "parallel-4-missing-one",
        parallel_net(&["a", "b", "c", "d"]),
        trace("c10", &[("a", 0, 5), ("b", 0, 5), ("c", 0, 5)]),
        Some(whole(1)),
    );

    let xor_ab = quick_net(
        &["p0", "p1"],
        &[
            ("ta", Some("a"), &["p0"], &["p1"]),
            ("tb", Some("b"), &["p0"], &["p1"]),
        ],
        &["p0"],
        &["p1"],
    );
    push(
        "xor-fit",
        xor_ab.clone(),
        trace("c11", &[("a", 0, 1)]),
        Some(whole(0)),
    );
    push(
        "xor-mismatch",
        xor_ab,
        trace("c12", &[("c", 0, 1)]),
        Some(whole(2)),
    );

    push(
        "dup-labels",
        chain_net(&["x", "x"]),
        trace("c13", &[("x", 0, 5), ("x", 0, 5)]),
        Some(whole(0)),
    );

    push(
        "loop-three-rounds",
        loop_net(),
        trace("c14", &[("a", 0, 1), ("a", 2, 3), ("a", 4, 5)]),
        Some(tau(3)), // two redo loops plus the exit
    );

    push(
        "loop-unfit",
        loop_net(),
        trace("c15", &[("b", 0, 1)]),
        Some(whole(2) + tau(1)),
    );

    let kite = quick_net(
        &["p0", "p1", "p2", "p3"],
        &[
            ("ta", Some("a"), &["p0"], &["p1"]),
            ("tb", Some("b"), &["p1"], &["p2"]),
            ("tc", Some("c"), &["p1"], &["p2"]),
            ("td", Some("d"), &["p2"], &["p3"]),
        ],
        &["p0"],
        &["p3"],
    );
    push(
        "kite-fit",
        kite.clone(),
        trace("c16", &[("a", 0, 1), ("b", 2, 3), ("d", 4, 5)]),
        Some(whole(0)),
    );
    push(
        "kite-both-branches",
        kite,
        trace("c17", &[("a", 0, 1), ("b", 2, 3), ("c", 4, 5), ("d", 6, 7)]),
        Some(whole(1)),
    );

    let two_chains = quick_net(
        &["p1", "p2", "p5", "p3", "p4", "p6"],
        &[
            ("ta", Some("a"), &["p1"], &["p2"]),
            ("tb", Some("b"), &["p2"], &["p5"]),
            ("tc", Some("c"), &["p3"], &["p4"]),
            ("td", Some("d"), &["p4"], &["p6"]),
        ],
        &["p1", "p3"],
        &["p5", "p6"],
    );
    push(
        "interleave-2x2",
        two_chains,
        trace("c18", &[("a", 0, 1), ("b", 2, 3), ("c", 0, 1), ("d", 2, 3)]),
        Some(whole(0)),
    );

    push(
        "swap-noise",
        chain_net(&["a", "b", "c"]),
        trace("c19", &[("b", 0, 1), ("a", 2, 3), ("c", 4, 5)]),
        Some(whole(2)),
    );

    push(
        "skip-middle",
        chain_net(&["a", "b", "c"]),
        trace("c20", &[("a", 0, 1), ("c", 2, 3)]),
        Some(whole(1)),
    );

    push(
        "alien-insert",
        chain_net(&["a", "b"]),
        trace("c21", &[("a", 0, 1), ("x", 2, 3), ("b", 4, 5)]),
        Some(whole(1)),
    );

    push(
        "wide-and-5",
        parallel_net(&["a", "b", "c", "d", "e"]),
        trace(
            "c22",
            &[
                ("a", 0, 9),
                ("b", 0, 9),
                ("c", 0, 9),
                ("d", 0, 9),
                ("e", 0, 9),
            ],
        ),
        Some(whole(0)),
    );

    push(
        "xor-duplicate-label",
        quick_net(
            &["p0", "p1"],
            &[
                ("t1", Some("a"), &["p0"], &["p1"]),
                ("t2", Some("a"), &["p0"], &["p1"]),
            ],
            &["p0"],
            &["p1"],
        ),
        trace("c23", &[("a", 0, 1)]),
        Some(whole(0)),
    );

    push(
        "dup-parallel-mismatch",
        quick_net(
            &["pa", "pm", "pe", "pc", "qc"],
            &[
                ("t1", Some("a"), &["pa"], &["pm"]),
                ("t2", Some("a"), &["pm"], &["pe"]),
                ("tc", Some("c"), &["pc"], &["qc"]),
            ],
            &["pa", "pc"],
            &["pe", "qc"],
        ),
        trace("c25", &[("a", 0, 9), ("a", 0, 9), ("x", 0, 9)]),
        Some(whole(2)), // log x plus model c; either a-pairing synchronizes freely
    );

    push(
        "fig2-concurrent-log",
        fig2_net(),
        trace("c24", &[("x", 0, 5), ("y", 0, 5)]),
        Some(whole(0)),
    );

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_large_and_well_formed() {
        let corpus = corpus();
        assert!(corpus.len() >= 20);
        for f in &corpus {
            assert!(f.model.validate().is_empty(), "{} model invalid", f.name);
            assert!(f.trace.n_events() >= 1, "{} trace empty", f.name);
        }
    }
}
