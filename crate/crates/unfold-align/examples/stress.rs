//! Scratch: larger-instance engine agreement stress (not a shipped test).
use unfold_align::align::{align_ptrace, AlignOptions, Engine};
use unfold_align::bench::{generate_model, inject_noise, simulate_log, GenSpec, NoiseSpec};
use unfold_align::product::CostModel;
use unfold_align::unfold::Budget;
use unfold_align::Rational;
use std::time::Instant;

fn main() {
    let cm = CostModel::<Rational>::default();
    let started = Instant::now();
    let mut n = 0;
    let mut max_trans = 0;
    for seed in 0..60u64 {
        let spec = GenSpec {
            n_activities: 8,
            parallelism_pct: (seed * 17 % 101) as u8,
            seed: 7_000 + seed,
            no_loops: seed % 3 == 0,
            no_duplicates: seed % 2 == 0,
        };
        let model = generate_model(&spec);
        max_trans = max_trans.max(model.n_transitions());
        let log = simulate_log(&model, 2, seed);
        let noisy = inject_noise(log, &NoiseSpec::new(40, seed ^ 0x99));
        for trace in &noisy {
            let mut costs = Vec::new();
            for engine in Engine::ALL {
                let opts = AlignOptions { engine, budget: Budget::timeout_ms(20_000), ..Default::default() };
                match align_ptrace(&model, trace, &cm, &opts) {
                    Ok(a) => costs.push(Some(a.cost)),
                    Err(e) => { println!("seed {seed} {engine}: {e}"); costs.push(None); }
                }
            }
            let known: Vec<_> = costs.iter().flatten().collect();
            assert!(known.windows(2).all(|w| w[0] == w[1]), "seed {seed}: engines disagree: {costs:?}");
            n += 1;
        }
    }
    println!("stress OK: {n} instances (8 activities, parallelism 0–100, noise 40, model ≤ {max_trans} transitions) in {:.1}s", started.elapsed().as_secs_f64());
}
