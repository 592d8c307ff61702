//! Trains an agent on the synthetic corpus and prints a small F1 grid.
//!
//! Corpus and training knobs come from the environment: `MARGIN`, `STRETCH`,
//! `TEMPLATE=min,max`, `CLIPS`, `CONTEXT=min,max`, `SEED`, `HELD_OUT=1` (train on other classes).

use std::env;
use std::time::Instant;

use kwspot::agents::AgentKind;
use kwspot::embeddings::{generate_corpus, SyntheticCorpusSpec, WindowSpec};
use kwspot::eval::{random_baseline_f1, run_grid, AgentSpotter, GridConfig};
use kwspot::training::{train, TrainConfig, DEFAULT_MARGIN};

fn var<T: std::str::FromStr>(name: &str, default: T) -> T {
    env::var(name)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = env::args().collect();
    let steps: u64 = args.get(1).map_or(Ok(10_000), |s| s.parse())?;
    let kind: AgentKind = args.get(2).map_or(Ok(AgentKind::Siamese), |s| s.parse())?;
    let mut spec = SyntheticCorpusSpec {
        seed: var("SEED", 1),
        ..Default::default()
    };
    spec.stretch = var("STRETCH", spec.stretch);
    spec.clips_per_class = var("CLIPS", spec.clips_per_class);
    if let Ok(t) = env::var("TEMPLATE") {
        let (a, b) = t.split_once(',').ok_or("TEMPLATE=min,max")?;
        spec.template_len = (a.parse()?, b.parse()?);
    }
    if let Ok(t) = env::var("CONTEXT") {
        let (a, b) = t.split_once(',').ok_or("CONTEXT=min,max")?;
        spec.clip_context = (a.parse()?, b.parse()?);
    }
    let eval_corpus = generate_corpus(&spec)?;
    let train_corpus = if var("HELD_OUT", 0) == 1 {
        generate_corpus(&SyntheticCorpusSpec {
            seed: spec.seed + 1000,
            classes: 20,
            ..spec.clone()
        })?
    } else {
        eval_corpus.clone()
    };
    let windows = WindowSpec::default();
    let config = TrainConfig {
        steps,
        seed: 3,
        margin: var("MARGIN", DEFAULT_MARGIN),
        ..Default::default()
    };
    let t = Instant::now();
    let out = train(kind, &train_corpus, windows.width(), &config)?;
    let head: f64 = out.losses[..100].iter().sum::<f64>() / 100.0;
    let tail: f64 = out.losses[out.losses.len() - 100..].iter().sum::<f64>() / 100.0;
    println!(
        "trained {steps} steps in {:.1?}: loss {head:.4} -> {tail:.4}",
        t.elapsed()
    );
    let spotter = AgentSpotter::new(out.params, windows);
    let grid = GridConfig {
        n_list: vec![2, 5, 10],
        k_list: vec![1, 4],
        runs: 10,
        ..Default::default()
    };
    let report = run_grid(&eval_corpus, &[&spotter], &grid)?;
    for s in report.summary() {
        println!(
            "N={:2} k={} P={:.3} R={:.3} F1={:.3} (baseline {:.3})",
            s.n,
            s.k,
            s.precision,
            s.recall,
            s.f1,
            random_baseline_f1(s.n, 0.5, 100_000, 0)
        );
    }
    Ok(())
}
