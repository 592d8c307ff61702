//! Episodic N-way k-shot evaluation of spotting over whole utterances.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::seq::index::sample;
use rand::Rng;

use crate::agents::{AgentParams, KeywordList, SupportSet};
use crate::embeddings::{Corpus, EmbeddingSequence, WindowSpec};
use crate::error::{Error, Result};
use crate::rng;

/// Table 1 axes.
pub const DEFAULT_N_LIST: [usize; 7] = [1, 5, 10, 15, 20, 25, 30];
pub const DEFAULT_K_LIST: [usize; 2] = [1, 4];
pub const DEFAULT_RUNS: usize = 10;

/// Anything that turns an utterance plus supports into a set of spotted classes.
pub trait Spotter {
    fn name(&self) -> String;
    fn spot_classes(
        &self,
        utterance: &EmbeddingSequence,
        supports: &SupportSet,
    ) -> Result<Vec<String>>;
}

/// A trained agent with its windowing and threshold.
#[derive(Clone, Debug)]
pub struct AgentSpotter {
    pub agent: AgentParams,
    pub windows: WindowSpec,
    pub threshold: f64,
}

impl AgentSpotter {
    /// Spotter with the agent's default threshold.
    pub fn new(agent: AgentParams, windows: WindowSpec) -> Self {
        let threshold = agent.kind.default_threshold();
        AgentSpotter {
            agent,
            windows,
            threshold,
        }
    }

    pub fn keywords(
        &self,
        utterance: &EmbeddingSequence,
        supports: &SupportSet,
    ) -> Result<KeywordList> {
        Ok(self
            .agent
            .spot(utterance, supports, self.windows, self.threshold)?
            .keywords)
    }
}

impl Spotter for AgentSpotter {
    fn name(&self) -> String {
        self.agent.kind.to_string()
    }

    fn spot_classes(
        &self,
        utterance: &EmbeddingSequence,
        supports: &SupportSet,
    ) -> Result<Vec<String>> {
        Ok(self
            .keywords(utterance, supports)?
            .classes()
            .into_iter()
            .map(String::from)
            .collect())
    }
}

/// Spots exactly the utterance's labelled keyword when it is among the supports.
pub struct OracleSpotter;

impl Spotter for OracleSpotter {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn spot_classes(
        &self,
        utterance: &EmbeddingSequence,
        supports: &SupportSet,
    ) -> Result<Vec<String>> {
        Ok(utterance
            .label
            .iter()
            .filter(|l| supports.get(l).is_some())
            .cloned()
            .collect())
    }
}

/// Spots every support class regardless of input.
pub struct AlwaysSpotter;

impl Spotter for AlwaysSpotter {
    fn name(&self) -> String {
        "always".into()
    }

    fn spot_classes(&self, _: &EmbeddingSequence, supports: &SupportSet) -> Result<Vec<String>> {
        Ok(supports
            .class_names()
            .into_iter()
            .map(String::from)
            .collect())
    }
}

/// Spots nothing.
pub struct SilentSpotter;

impl Spotter for SilentSpotter {
    fn name(&self) -> String {
        "silent".into()
    }

    fn spot_classes(&self, _: &EmbeddingSequence, _: &SupportSet) -> Result<Vec<String>> {
        Ok(Vec::new())
    }
}

/// One randomized N-way k-shot setup over a corpus, by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Episode {
    /// Selected class indices, in sampling order.
    pub classes: Vec<usize>,
    /// Per selected class, the clip indices used as supports.
    pub supports: Vec<Vec<usize>>,
    /// Query utterances as `(class index, utterance index)`.
    pub queries: Vec<(usize, usize)>,
}

impl Episode {
    pub fn n(&self) -> usize {
        self.classes.len()
    }

    pub fn k(&self) -> usize {
        self.supports.first().map_or(0, Vec::len)
    }

    pub fn support_set(&self, corpus: &Corpus, width: usize) -> Result<SupportSet> {
        SupportSet::from_clips(
            self.classes.iter().zip(&self.supports).map(|(&c, idx)| {
                (
                    corpus.class_names[c].clone(),
                    idx.iter().map(|&i| &corpus.clips[c][i]).collect(),
                )
            }),
            width,
        )
    }

    pub fn query<'a>(&self, corpus: &'a Corpus, q: usize) -> &'a EmbeddingSequence {
        let (c, u) = self.queries[q];
        &corpus.utterances[c][u]
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

/// Samples `n` classes, `k` support clips per class and `queries_per_class`
/// utterances per class, all without replacement.
pub fn sample_episode(
    corpus: &Corpus,
    n: usize,
    k: usize,
    queries_per_class: usize,
    rng: &mut impl Rng,
) -> Result<Episode> {
    if n == 0 || k == 0 || queries_per_class == 0 {
        return Err(Error::Invalid(
            "N, k and queries per class must be positive".into(),
        ));
    }
    let eligible: Vec<usize> = (0..corpus.num_classes())
        .filter(|&c| corpus.clips[c].len() >= k && corpus.utterances[c].len() >= queries_per_class)
        .collect();
    if eligible.len() < n {
        return Err(Error::Insufficient(format!(
            "{n}-way {k}-shot needs {n} classes with >= {k} clips and >= {queries_per_class} utterances; corpus has {}",
            eligible.len()
        )));
    }
    let classes: Vec<usize> = sample(rng, eligible.len(), n)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    let supports = classes
        .iter()
        .map(|&c| sample(rng, corpus.clips[c].len(), k).into_vec())
        .collect();
    let mut queries = Vec::with_capacity(n * queries_per_class);
    for &c in &classes {
        for u in sample(rng, corpus.utterances[c].len(), queries_per_class) {
            queries.push((c, u));
        }
    }
    Ok(Episode {
        classes,
        supports,
        queries,
    })
}

/// True positive, false positive and false negative counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Tally {
    /// Adds one query: `truth` is the keyword actually present, `spotted` the spotter output.
    pub fn record<S: AsRef<str>>(&mut self, truth: &str, spotted: &[S]) {
        let mut hit = false;
        for (i, s) in spotted.iter().enumerate() {
            let s = s.as_ref();
            if spotted[..i].iter().any(|p| p.as_ref() == s) {
                continue;
            }
            if s == truth {
                hit = true;
            } else {
                self.fp += 1;
            }
        }
        if hit {
            self.tp += 1;
        } else {
            self.fn_ += 1;
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.recall())
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Spots every query of `episode` against all its classes and tallies the outcome.
pub fn evaluate_episode(
    corpus: &Corpus,
    episode: &Episode,
    spotter: &dyn Spotter,
    width: usize,
) -> Result<Tally> {
    let supports = episode.support_set(corpus, width)?;
    let mut tally = Tally::default();
    for q in 0..episode.queries.len() {
        let (class, _) = episode.queries[q];
        let spotted = spotter.spot_classes(episode.query(corpus, q), &supports)?;
        tally.record(&corpus.class_names[class], &spotted);
    }
    Ok(tally)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub agent: String,
    pub n: usize,
    pub k: usize,
    pub run: usize,
    pub tally: Tally,
    pub episode: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub agent: String,
    pub n: usize,
    pub k: usize,
    pub runs: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub runs: Vec<RunMetrics>,
}

impl EvalReport {
    /// Per (agent, N, k): arithmetic means of per-run precision, recall and F1.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows: Vec<SummaryRow> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for r in &self.runs {
            let pos = rows
                .iter()
                .position(|s| s.agent == r.agent && s.n == r.n && s.k == r.k);
            let i = pos.unwrap_or_else(|| {
                rows.push(SummaryRow {
                    agent: r.agent.clone(),
                    n: r.n,
                    k: r.k,
                    runs: 0,
                    precision: 0.0,
                    recall: 0.0,
                    f1: 0.0,
                });
                counts.push(0);
                rows.len() - 1
            });
            rows[i].precision += r.tally.precision();
            rows[i].recall += r.tally.recall();
            rows[i].f1 += r.tally.f1();
            counts[i] += 1;
        }
        for (row, &c) in rows.iter_mut().zip(&counts) {
            row.runs = c;
            row.precision /= c as f64;
            row.recall /= c as f64;
            row.f1 /= c as f64;
        }
        rows
    }

    pub fn mean_f1(&self, agent: &str, n: usize, k: usize) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|s| s.agent == agent && s.n == n && s.k == k)
            .map(|s| s.f1)
    }

    /// CSV `agent,N,k,run,precision,recall,f1`.
    pub fn runs_csv(&self) -> String {
        let mut out = String::from("agent,N,k,run,precision,recall,f1\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6}\n",
                r.agent,
                r.n,
                r.k,
                r.run,
                r.tally.precision(),
                r.tally.recall(),
                r.tally.f1()
            ));
        }
        out
    }

    /// CSV `agent,N,k,runs,precision,recall,f1` of run-averaged metrics.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("agent,N,k,runs,precision,recall,f1\n");
        for s in self.summary() {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6}\n",
                s.agent, s.n, s.k, s.runs, s.precision, s.recall, s.f1
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub n_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub runs: usize,
    pub queries_per_class: usize,
    pub seed: u64,
    /// Support window width.
    pub width: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_list: DEFAULT_N_LIST.to_vec(),
            k_list: DEFAULT_K_LIST.to_vec(),
            runs: DEFAULT_RUNS,
            queries_per_class: 1,
            seed: 0,
            width: WindowSpec::default().width(),
        }
    }
}

/// The episode used for cell (`n`, `k`) in run `run`; shared by every spotter.
pub fn grid_episode(
    corpus: &Corpus,
    grid: &GridConfig,
    n: usize,
    k: usize,
    run: usize,
) -> Result<Episode> {
    let mut r = rng::stream(grid.seed, &format!("episodes/N{n}/k{k}/run{run}"));
    sample_episode(corpus, n, k, grid.queries_per_class, &mut r)
}

/// Evaluates every spotter on the same sampled episodes for each (N, k, run).
pub fn run_grid(
    corpus: &Corpus,
    spotters: &[&dyn Spotter],
    grid: &GridConfig,
) -> Result<EvalReport> {
    if grid.runs == 0 || grid.n_list.is_empty() || grid.k_list.is_empty() {
        return Err(Error::Config(
            "grid needs N and k values and at least one run".into(),
        ));
    }
    let mut report = EvalReport::default();
    for &n in &grid.n_list {
        for &k in &grid.k_list {
            for run in 0..grid.runs {
                let episode = grid_episode(corpus, grid, n, k, run)?;
                let fingerprint = episode.fingerprint();
                for spotter in spotters {
                    let tally = evaluate_episode(corpus, &episode, *spotter, grid.width)?;
                    report.runs.push(RunMetrics {
                        agent: spotter.name(),
                        n,
                        k,
                        run,
                        tally,
                        episode: fingerprint,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Monte-Carlo F1 of a spotter that flags each of `n` classes independently
/// with probability `positive_rate`, on queries holding exactly one true class.
/// Counts are pooled over all trials.
pub fn random_baseline_f1(n: usize, positive_rate: f64, trials: usize, seed: u64) -> f64 {
    let mut r = rng::stream(seed, &format!("baseline/N{n}"));
    let mut tally = Tally::default();
    for _ in 0..trials {
        let hit = r.random_bool(positive_rate);
        let false_flags = (1..n).filter(|_| r.random_bool(positive_rate)).count();
        tally.fp += false_flags;
        if hit {
            tally.tp += 1;
        } else {
            tally.fn_ += 1;
        }
    }
    tally.f1()
}
