//! `key = value` run configuration shared by every subcommand.
//!
//! Files hold one `key = value` pair per line; `#` starts a comment. Values
//! are layered: built-in defaults, then the config file, then `--set`
//! overrides. Every key is type-checked before any command runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::agents::{AgentKind, PrototypeMode};
use crate::embeddings::{SyntheticCorpusSpec, WindowSpec};
use crate::error::{Error, Result};
use crate::eval::{GridConfig, DEFAULT_K_LIST, DEFAULT_N_LIST, DEFAULT_RUNS};
use crate::rerank::HypothesisSpec;
use crate::training::{TrainConfig, DEFAULT_LR, DEFAULT_MARGIN, DEFAULT_RHO, DEFAULT_STEPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Count,
    Real,
    Text,
    Counts,
    Agent,
    Proto,
    /// A real number or `auto`.
    RealOrAuto,
}

struct Key {
    name: &'static str,
    kind: Kind,
    help: &'static str,
}

const fn key(name: &'static str, kind: Kind, help: &'static str) -> Key {
    Key { name, kind, help }
}

const KEYS: &[Key] = &[
    key("seed", Kind::Count, "master seed for every random stream"),
    key("out", Kind::Text, "output directory"),
    // corpus generation
    key("classes", Kind::Count, "keyword classes"),
    key("dim", Kind::Count, "embedding dimension D"),
    key(
        "template_min",
        Kind::Count,
        "shortest keyword template, frames",
    ),
    key(
        "template_max",
        Kind::Count,
        "longest keyword template, frames",
    ),
    key(
        "background_min",
        Kind::Count,
        "fewest background frames per utterance",
    ),
    key(
        "background_max",
        Kind::Count,
        "most background frames per utterance",
    ),
    key(
        "clip_context_min",
        Kind::Count,
        "fewest background frames around a clip",
    ),
    key(
        "clip_context_max",
        Kind::Count,
        "most background frames around a clip",
    ),
    key("sigma", Kind::Real, "keyword instance jitter"),
    key(
        "background_sigma",
        Kind::RealOrAuto,
        "background noise level; auto = 1/sqrt(dim)",
    ),
    key("stretch", Kind::Real, "maximum relative time stretch"),
    key("clips_per_class", Kind::Count, "support clips per class"),
    key("utterances_per_class", Kind::Count, "utterances per class"),
    key("beam", Kind::Count, "hypotheses per utterance"),
    key(
        "lower_rank_fraction",
        Kind::Real,
        "share of beams with the right transcript below rank 0",
    ),
    key(
        "confusable_rate",
        Kind::Real,
        "chance a wrong hypothesis holds another keyword",
    ),
    key(
        "insertion_rate",
        Kind::Real,
        "chance a later hypothesis adds a second keyword",
    ),
    key(
        "filler_min",
        Kind::Count,
        "fewest filler words on each side of the keyword",
    ),
    key(
        "filler_max",
        Kind::Count,
        "most filler words on each side of the keyword",
    ),
    // training
    key("corpus", Kind::Text, "corpus directory written by gen"),
    key(
        "agent",
        Kind::Agent,
        "siamese | relation | proto | matching",
    ),
    key("steps", Kind::Count, "training steps"),
    key("margin", Kind::Real, "contrastive margin"),
    key("lr", Kind::Real, "RMSProp learning rate"),
    key("rho", Kind::Real, "RMSProp discounting factor"),
    key("window", Kind::Count, "window width W, frames"),
    key("hop", Kind::Count, "window hop H, frames"),
    key(
        "checkpoint_interval",
        Kind::Count,
        "extra checkpoint every n steps; 0 = off",
    ),
    key("resume", Kind::Text, "checkpoint to continue training from"),
    // spotting
    key("utterance", Kind::Text, "EMB file to spot keywords in"),
    key(
        "supports",
        Kind::Text,
        "directory of labelled EMB support clips",
    ),
    key("checkpoint", Kind::Text, "agent checkpoint for spot"),
    key(
        "threshold",
        Kind::RealOrAuto,
        "spotting threshold; auto = agent default",
    ),
    key(
        "proto_mode",
        Kind::Proto,
        "encoded (mean of encodings) | raw (encoding of mean)",
    ),
    // evaluation and reranking
    key(
        "checkpoints",
        Kind::Text,
        "comma-separated checkpoints or oracle/always/silent",
    ),
    key("n_list", Kind::Counts, "episode sizes N"),
    key("k_list", Kind::Counts, "shots k"),
    key("runs", Kind::Count, "episodes per (N, k)"),
    key(
        "queries_per_class",
        Kind::Count,
        "query utterances per class per episode",
    ),
    key(
        "hypotheses",
        Kind::Text,
        "hypothesis file; default <corpus>/hyps.txt",
    ),
];

fn list(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn defaults() -> BTreeMap<&'static str, String> {
    let corpus = SyntheticCorpusSpec::default();
    let hyps = HypothesisSpec::default();
    let window = WindowSpec::default();
    let pairs: Vec<(&str, String)> = vec![
        ("seed", "0".into()),
        ("out", "out".into()),
        ("classes", corpus.classes.to_string()),
        ("dim", corpus.dim.to_string()),
        ("template_min", corpus.template_len.0.to_string()),
        ("template_max", corpus.template_len.1.to_string()),
        ("background_min", corpus.background_len.0.to_string()),
        ("background_max", corpus.background_len.1.to_string()),
        ("clip_context_min", corpus.clip_context.0.to_string()),
        ("clip_context_max", corpus.clip_context.1.to_string()),
        ("sigma", corpus.sigma.to_string()),
        ("background_sigma", "auto".into()),
        ("stretch", corpus.stretch.to_string()),
        ("clips_per_class", corpus.clips_per_class.to_string()),
        (
            "utterances_per_class",
            corpus.utterances_per_class.to_string(),
        ),
        ("beam", hyps.beam.to_string()),
        ("lower_rank_fraction", hyps.lower_rank_fraction.to_string()),
        ("confusable_rate", hyps.confusable_rate.to_string()),
        ("insertion_rate", hyps.insertion_rate.to_string()),
        ("filler_min", hyps.filler.0.to_string()),
        ("filler_max", hyps.filler.1.to_string()),
        ("corpus", String::new()),
        ("agent", AgentKind::Siamese.to_string()),
        ("steps", DEFAULT_STEPS.to_string()),
        ("margin", DEFAULT_MARGIN.to_string()),
        ("lr", DEFAULT_LR.to_string()),
        ("rho", DEFAULT_RHO.to_string()),
        ("window", window.width().to_string()),
        ("hop", window.hop().to_string()),
        ("checkpoint_interval", "0".into()),
        ("resume", String::new()),
        ("utterance", String::new()),
        ("supports", String::new()),
        ("checkpoint", String::new()),
        ("threshold", "auto".into()),
        ("proto_mode", "encoded".into()),
        ("checkpoints", String::new()),
        ("n_list", list(&DEFAULT_N_LIST)),
        ("k_list", list(&DEFAULT_K_LIST)),
        ("runs", DEFAULT_RUNS.to_string()),
        ("queries_per_class", "1".into()),
        ("hypotheses", String::new()),
    ];
    pairs.into_iter().collect()
}

fn lookup(name: &str) -> Result<&'static Key> {
    KEYS.iter()
        .find(|k| k.name == name)
        .ok_or_else(|| Error::Config(format!("unknown config key `{name}`")))
}

fn check(key: &Key, value: &str) -> Result<()> {
    let bad = |what: &str| {
        Err(Error::Config(format!(
            "`{}` expects {what}, got {value:?}",
            key.name
        )))
    };
    let ok = match key.kind {
        Kind::Count => value.parse::<u64>().is_ok(),
        Kind::Real => value.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::RealOrAuto => value == "auto" || value.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::Text => true,
        Kind::Counts => value.split(',').all(|v| v.trim().parse::<usize>().is_ok()),
        Kind::Agent => value.parse::<AgentKind>().is_ok(),
        Kind::Proto => value.parse::<PrototypeMode>().is_ok(),
    };
    if ok {
        return Ok(());
    }
    match key.kind {
        Kind::Count => bad("a non-negative integer"),
        Kind::Real => bad("a finite number"),
        Kind::RealOrAuto => bad("a finite number or `auto`"),
        Kind::Counts => bad("comma-separated non-negative integers"),
        Kind::Agent => bad("siamese, relation, proto or matching"),
        Kind::Proto => bad("encoded or raw"),
        Kind::Text => unreachable!(),
    }
}

/// Splits `key=value` (surrounding whitespace ignored).
pub fn parse_assignment(text: &str) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got {text:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { values: defaults() }
    }
}

impl RunConfig {
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let key = lookup(name)?;
        check(key, value)?;
        self.values.insert(key.name, value.to_string());
        Ok(())
    }

    /// Applies every assignment in a config file's text.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let located = |e: Error| Error::Config(format!("{source}:{}: {e}", i + 1));
            let (k, v) = parse_assignment(line).map_err(located)?;
            self.set(&k, &v).map_err(located)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn get(&self, name: &str) -> &str {
        self.values
            .get(name)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("config key `{name}` is not registered"))
    }

    pub fn count(&self, name: &str) -> u64 {
        self.get(name).parse().expect("validated count")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.count(name) as usize
    }

    pub fn real(&self, name: &str) -> f64 {
        self.get(name).parse().expect("validated real")
    }

    /// `None` when the key is `auto`.
    pub fn real_or_auto(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            "auto" => None,
            v => Some(v.parse().expect("validated real")),
        }
    }

    pub fn counts(&self, name: &str) -> Vec<usize> {
        self.get(name)
            .split(',')
            .map(|v| v.trim().parse().expect("validated list"))
            .collect()
    }

    /// `None` when the key is empty.
    pub fn path(&self, name: &str) -> Option<PathBuf> {
        Some(self.get(name))
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    }

    /// The path under `name`, or a config error naming the key.
    pub fn required_path(&self, name: &str) -> Result<PathBuf> {
        self.path(name)
            .ok_or_else(|| Error::Config(format!("`{name}` must be set for this command")))
    }

    pub fn agent(&self) -> AgentKind {
        self.get("agent").parse().expect("validated agent")
    }

    pub fn proto_mode(&self) -> PrototypeMode {
        self.get("proto_mode").parse().expect("validated mode")
    }

    pub fn out(&self) -> PathBuf {
        PathBuf::from(self.get("out"))
    }

    pub fn corpus_spec(&self) -> Result<SyntheticCorpusSpec> {
        let dim = self.usize("dim");
        let spec = SyntheticCorpusSpec {
            classes: self.usize("classes"),
            template_len: (self.usize("template_min"), self.usize("template_max")),
            background_len: (self.usize("background_min"), self.usize("background_max")),
            clip_context: (
                self.usize("clip_context_min"),
                self.usize("clip_context_max"),
            ),
            sigma: self.real("sigma"),
            background_sigma: self
                .real_or_auto("background_sigma")
                .unwrap_or(1.0 / (dim.max(1) as f64).sqrt()),
            stretch: self.real("stretch"),
            dim,
            clips_per_class: self.usize("clips_per_class"),
            utterances_per_class: self.usize("utterances_per_class"),
            seed: self.count("seed"),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn hypothesis_spec(&self) -> Result<HypothesisSpec> {
        let spec = HypothesisSpec {
            beam: self.usize("beam"),
            lower_rank_fraction: self.real("lower_rank_fraction"),
            confusable_rate: self.real("confusable_rate"),
            insertion_rate: self.real("insertion_rate"),
            filler: (self.usize("filler_min"), self.usize("filler_max")),
            seed: self.count("seed"),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let config = TrainConfig {
            steps: self.count("steps"),
            seed: self.count("seed"),
            margin: self.real("margin"),
            lr: self.real("lr"),
            rho: self.real("rho"),
            checkpoint_interval: self.count("checkpoint_interval"),
            checkpoint_dir: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn window_spec(&self, width: usize) -> Result<WindowSpec> {
        WindowSpec::new(width, self.usize("hop")).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self, width: usize) -> Result<GridConfig> {
        let grid = GridConfig {
            n_list: self.counts("n_list"),
            k_list: self.counts("k_list"),
            runs: self.usize("runs"),
            queries_per_class: self.usize("queries_per_class"),
            seed: self.count("seed"),
            width,
        };
        if grid.runs == 0 || grid.queries_per_class == 0 {
            return Err(Error::Config(
                "runs and queries_per_class must be positive".into(),
            ));
        }
        if grid.n_list.contains(&0) || grid.k_list.contains(&0) {
            return Err(Error::Config("N and k values must be positive".into()));
        }
        Ok(grid)
    }

    /// Every key except `out` with its resolved value, one `key = value` line each.
    pub fn snapshot(&self, command: &str) -> String {
        let mut out = format!("# kwspot {command}\n");
        for key in KEYS.iter().filter(|k| k.name != "out") {
            let _ = writeln!(out, "{} = {}", key.name, self.values[key.name]);
        }
        out
    }

    /// Key reference for `--help` output.
    pub fn key_help() -> String {
        let defaults = defaults();
        let mut out = String::from("Config keys (default in brackets):\n");
        for key in KEYS {
            let _ = writeln!(
                out,
                "  {:<22} {} [{}]",
                key.name, key.help, defaults[key.name]
            );
        }
        out
    }
}
