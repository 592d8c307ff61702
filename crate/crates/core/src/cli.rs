//! The `kwspot` command line.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! data errors (missing or malformed inputs, dimension mismatches, I/O).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agents::{trace_csv, SupportSet};
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::RunConfig;
use crate::embeddings::{
    generate_corpus, load_corpus, load_embedding, save_corpus, EmbeddingSequence,
};
use crate::error::{Error, Result};
use crate::eval::{run_grid, AgentSpotter, AlwaysSpotter, OracleSpotter, SilentSpotter, Spotter};
use crate::rerank::{generate_hypotheses, load_hypotheses, save_hypotheses, wer_csv, wer_grid};
use crate::training::{loss_csv, train, train_from};

pub const SNAPSHOT: &str = "config.resolved";
pub const HYPOTHESES: &str = "hyps.txt";

#[derive(Parser, Debug)]
#[command(
    name = "kwspot",
    version,
    about = "Few-shot keyword spotting and n-best reranking"
)]
#[command(after_help = RunConfig::key_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus and its n-best hypotheses.
    Gen(Common),
    /// Train an agent on a corpus's support clips.
    Train(Common),
    /// Spot keywords in one utterance.
    Spot(Common),
    /// Run the N-way k-shot evaluation grid.
    Eval(Common),
    /// Measure keyword WER of reranked hypotheses over the grid.
    Rerank(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the `out` key.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        for assignment in &self.set {
            let (k, v) = crate::config::parse_assignment(assignment)?;
            config.set(&k, &v)?;
        }
        if let Some(seed) = self.seed {
            config.set("seed", &seed.to_string())?;
        }
        if let Some(out) = &self.out {
            let out = out
                .to_str()
                .ok_or_else(|| Error::Config("--out must be UTF-8".into()))?;
            config.set("out", out)?;
        }
        Ok(config)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (name, common) = match &cli.command {
        Command::Gen(c) => ("gen", c),
        Command::Train(c) => ("train", c),
        Command::Spot(c) => ("spot", c),
        Command::Eval(c) => ("eval", c),
        Command::Rerank(c) => ("rerank", c),
    };
    let outcome = common.resolve().and_then(|config| match cli.command {
        Command::Gen(_) => cmd_gen(&config),
        Command::Train(_) => cmd_train(&config),
        Command::Spot(_) => cmd_spot(&config),
        Command::Eval(_) => cmd_eval(&config),
        Command::Rerank(_) => cmd_rerank(&config),
    });
    match outcome {
        Ok(()) => 0,
        Err(Error::Config(msg)) => {
            eprintln!("kwspot {name}: {msg}");
            eprintln!("run `kwspot --help` for the list of config keys");
            1
        }
        Err(e) => {
            eprintln!("kwspot {name}: {e}");
            2
        }
    }
}

fn prepare_out(config: &RunConfig, command: &str) -> Result<PathBuf> {
    let out = config.out();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write(&out.join(SNAPSHOT), &config.snapshot(command))?;
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_gen(config: &RunConfig) -> Result<()> {
    let spec = config.corpus_spec()?;
    let hyp_spec = config.hypothesis_spec()?;
    let corpus = generate_corpus(&spec)?;
    let hyps = generate_hypotheses(&corpus, &hyp_spec)?;
    let out = prepare_out(config, "gen")?;
    let files = save_corpus(&corpus, &out)?;
    save_hypotheses(&hyps, out.join(HYPOTHESES))?;
    println!(
        "wrote {files} sequences for {} classes and {} hypothesis lists to {}",
        corpus.num_classes(),
        hyps.len(),
        out.display()
    );
    Ok(())
}

fn cmd_train(config: &RunConfig) -> Result<()> {
    let corpus_dir = config.required_path("corpus")?;
    let mut train_config = config.train_config()?;
    let window = config.window_spec(config.usize("window"))?.width();
    let kind = config.agent();
    let resume = config.path("resume");

    let corpus = load_corpus(&corpus_dir)?;
    let start = match &resume {
        Some(path) => {
            let agent = load_checkpoint(path)?;
            if agent.kind != kind {
                return Err(Error::Config(format!(
                    "`agent` is {kind} but {} holds a {} agent",
                    path.display(),
                    agent.kind
                )));
            }
            Some(agent)
        }
        None => None,
    };
    let out = prepare_out(config, "train")?;
    if train_config.checkpoint_interval > 0 {
        train_config.checkpoint_dir = Some(out.clone());
    }
    let first_step = start.as_ref().map_or(0, |a| a.steps);
    let outcome = match start {
        Some(agent) => train_from(agent, &corpus, &train_config)?,
        None => train(kind, &corpus, window, &train_config)?,
    };
    save_checkpoint(&outcome.params, out.join("checkpoint.msp"))?;
    write(
        &out.join("loss.csv"),
        &loss_csv(&outcome.losses, first_step),
    )?;
    let last = outcome
        .losses
        .last()
        .map_or(String::from("-"), |l| format!("{l:.6}"));
    println!(
        "trained {kind} for {} steps (total {}), last loss {last}",
        outcome.losses.len(),
        outcome.params.steps
    );
    Ok(())
}

/// Loads every `.emb` file in `dir` (sorted by name) and groups them by label.
fn load_support_dir(dir: &Path) -> Result<Vec<(String, Vec<EmbeddingSequence>)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|x| x == "emb"))
        .collect();
    paths.sort();
    let mut groups: Vec<(String, Vec<EmbeddingSequence>)> = Vec::new();
    for path in paths {
        let seq = load_embedding(&path)?;
        let label = seq
            .label
            .clone()
            .ok_or_else(|| Error::Invalid(format!("support {} has no label", path.display())))?;
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, seqs)) => seqs.push(seq),
            None => groups.push((label, vec![seq])),
        }
    }
    if groups.is_empty() {
        return Err(Error::Insufficient(format!(
            "no .emb supports in {}",
            dir.display()
        )));
    }
    Ok(groups)
}

fn cmd_spot(config: &RunConfig) -> Result<()> {
    let utterance_path = config.required_path("utterance")?;
    let support_dir = config.required_path("supports")?;
    let checkpoint = config.required_path("checkpoint")?;
    let threshold = config.real_or_auto("threshold");
    let mode = config.proto_mode();

    let mut agent = load_checkpoint(&checkpoint)?;
    agent.prototype = mode;
    let windows = config.window_spec(agent.window)?;
    let utterance = load_embedding(&utterance_path)?;
    let groups = load_support_dir(&support_dir)?;
    let supports = SupportSet::from_clips(
        groups
            .iter()
            .map(|(l, seqs)| (l.clone(), seqs.iter().collect())),
        agent.window,
    )?;
    let threshold = threshold.unwrap_or_else(|| agent.kind.default_threshold());
    let result = agent.spot(&utterance, &supports, windows, threshold)?;
    let out = prepare_out(config, "spot")?;
    write(&out.join("trace.csv"), &trace_csv(&result.trace))?;
    for k in &result.keywords.0 {
        println!("{}\t{:.6}\t{}", k.class, k.score, k.window_offset);
    }
    Ok(())
}

/// A spotter reported under a different name.
struct Renamed {
    name: String,
    inner: Box<dyn Spotter>,
}

impl Spotter for Renamed {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn spot_classes(
        &self,
        utterance: &EmbeddingSequence,
        supports: &SupportSet,
    ) -> Result<Vec<String>> {
        self.inner.spot_classes(utterance, supports)
    }
}

/// Spotters named by `checkpoints`, and the support window width they share.
fn load_spotters(config: &RunConfig) -> Result<(Vec<Renamed>, usize)> {
    let list = config.get("checkpoints");
    let entries: Vec<&str> = list
        .split(',')
        .map(str::trim)
        .filter(|e| !e.is_empty())
        .collect();
    if entries.is_empty() {
        return Err(Error::Config(
            "`checkpoints` must name at least one spotter".into(),
        ));
    }
    let threshold = config.real_or_auto("threshold");
    let mut width = None;
    let mut spotters: Vec<Renamed> = Vec::new();
    for entry in entries {
        let inner: Box<dyn Spotter> = match entry {
            "oracle" => Box::new(OracleSpotter),
            "always" => Box::new(AlwaysSpotter),
            "silent" => Box::new(SilentSpotter),
            path => {
                let mut agent = load_checkpoint(path)?;
                agent.prototype = config.proto_mode();
                match width {
                    Some(w) if w != agent.window => {
                        return Err(Error::Config(format!(
                            "{path} uses window {} but an earlier checkpoint uses {w}",
                            agent.window
                        )))
                    }
                    _ => width = Some(agent.window),
                }
                let windows = config.window_spec(agent.window)?;
                let mut spotter = AgentSpotter::new(agent, windows);
                if let Some(t) = threshold {
                    spotter.threshold = t;
                }
                Box::new(spotter)
            }
        };
        let base = inner.name();
        let taken = |n: &str| spotters.iter().any(|s| s.name == n);
        let mut name = base.clone();
        let mut i = 2;
        while taken(&name) {
            name = format!("{base}{i}");
            i += 1;
        }
        spotters.push(Renamed { name, inner });
    }
    let width = match width {
        Some(w) => w,
        None => config.window_spec(config.usize("window"))?.width(),
    };
    Ok((spotters, width))
}

fn cmd_eval(config: &RunConfig) -> Result<()> {
    let corpus_dir = config.required_path("corpus")?;
    config.grid(config.usize("window"))?;
    let (spotters, width) = load_spotters(config)?;
    let grid = config.grid(width)?;
    let corpus = load_corpus(&corpus_dir)?;
    let refs: Vec<&dyn Spotter> = spotters.iter().map(|s| s as &dyn Spotter).collect();
    let report = run_grid(&corpus, &refs, &grid)?;
    let out = prepare_out(config, "eval")?;
    write(&out.join("eval_runs.csv"), &report.runs_csv())?;
    let summary = report.summary_csv();
    write(&out.join("eval_summary.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_rerank(config: &RunConfig) -> Result<()> {
    let corpus_dir = config.required_path("corpus")?;
    config.grid(config.usize("window"))?;
    let hyp_path = config
        .path("hypotheses")
        .unwrap_or_else(|| corpus_dir.join(HYPOTHESES));
    let (spotters, width) = load_spotters(config)?;
    let grid = config.grid(width)?;
    let corpus = load_corpus(&corpus_dir)?;
    let hyps = load_hypotheses(&hyp_path)?;
    let refs: Vec<&dyn Spotter> = spotters.iter().map(|s| s as &dyn Spotter).collect();
    let rows = wer_grid(&corpus, &hyps, &refs, &grid)?;
    let out = prepare_out(config, "rerank")?;
    let table = wer_csv(&rows);
    write(&out.join("wer.csv"), &table)?;
    print!("{table}");
    Ok(())
}
