//! N-best reranking with spotted keywords, and keyword-restricted WER.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::embeddings::{item_id, Corpus};
use crate::error::{Error, Result};
use crate::eval::{grid_episode, GridConfig, Spotter};
use crate::rng;

pub const DEFAULT_BEAM: usize = 4;

/// One beam entry; `rank` 0 is the decoder's best guess.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hypothesis {
    pub rank: usize,
    pub tokens: Vec<String>,
}

impl Hypothesis {
    /// Splits `text` on whitespace and lowercases every token.
    pub fn new(rank: usize, text: &str) -> Self {
        Hypothesis {
            rank,
            tokens: tokenize(text),
        }
    }

    /// Whole-word, case-insensitive containment.
    pub fn contains(&self, word: &str) -> bool {
        let word = word.to_lowercase();
        self.tokens.contains(&word)
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// The beam for one utterance together with its reference transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisList {
    pub id: String,
    pub reference: Vec<String>,
    pub hypotheses: Vec<Hypothesis>,
}

impl HypothesisList {
    /// Checks that the list is nonempty and ranked `0, 1, 2, ...` in order.
    pub fn new(
        id: impl Into<String>,
        reference: Vec<String>,
        hypotheses: Vec<Hypothesis>,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!(
                "utterance id {id:?} must be a non-empty word"
            )));
        }
        if hypotheses.is_empty() {
            return Err(Error::Invalid(format!("{id}: empty hypothesis list")));
        }
        if let Some((i, h)) = hypotheses.iter().enumerate().find(|(i, h)| h.rank != *i) {
            return Err(Error::Invalid(format!(
                "{id}: hypothesis {i} has rank {}, ranks must run 0..{}",
                h.rank,
                hypotheses.len()
            )));
        }
        Ok(HypothesisList {
            id,
            reference,
            hypotheses,
        })
    }

    /// The untouched beam-best hypothesis.
    pub fn vanilla(&self) -> &Hypothesis {
        &self.hypotheses[0]
    }

    pub fn rerank<S: AsRef<str>>(&self, spotted: &[S]) -> Result<RerankResult> {
        rerank(&self.hypotheses, spotted)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RerankResult {
    /// The reordered beam; each entry keeps its original rank.
    pub order: Vec<Hypothesis>,
    /// Spotted keywords found in the chosen hypothesis.
    pub triggers: Vec<String>,
}

impl RerankResult {
    pub fn chosen(&self) -> &Hypothesis {
        &self.order[0]
    }

    /// Original beam rank of the chosen hypothesis.
    pub fn chosen_rank(&self) -> usize {
        self.order[0].rank
    }
}

/// Moves hypotheses containing spotted keywords to the front.
///
/// Sorting is stable on the descending number of distinct spotted keywords a
/// hypothesis contains, so hypotheses without any keep their relative order
/// at the back. Input order, not the `rank` field, decides ties.
pub fn rerank<S: AsRef<str>>(hyps: &[Hypothesis], spotted: &[S]) -> Result<RerankResult> {
    if hyps.is_empty() {
        return Err(Error::Invalid(
            "cannot rerank an empty hypothesis list".into(),
        ));
    }
    let mut keywords: Vec<String> = Vec::new();
    for s in spotted {
        let k = s.as_ref().to_lowercase();
        if !keywords.contains(&k) {
            keywords.push(k);
        }
    }
    let hits = |h: &Hypothesis| keywords.iter().filter(|k| h.contains(k)).count();
    let mut order = hyps.to_vec();
    order.sort_by_key(|h| std::cmp::Reverse(hits(h)));
    let triggers = keywords
        .iter()
        .filter(|k| order[0].contains(k))
        .cloned()
        .collect();
    Ok(RerankResult { order, triggers })
}

/// Minimum-edit alignment cost of `hyp` against `reference` as
/// `(edits, keyword errors)`.
///
/// Among all alignments with the fewest edits, the one with the fewest keyword
/// errors is taken. Substitutions and deletions are keyword errors when the
/// reference token is a keyword, insertions when the inserted token is.
pub fn alignment_errors(
    hyp: &[String],
    reference: &[String],
    is_keyword: impl Fn(&str) -> bool,
) -> (usize, usize) {
    let add = |(a, b): (usize, usize), kw: bool| (a + 1, b + kw as usize);
    let mut prev: Vec<(usize, usize)> = Vec::with_capacity(hyp.len() + 1);
    prev.push((0, 0));
    for h in hyp {
        let last = *prev.last().expect("nonempty row");
        prev.push(add(last, is_keyword(h)));
    }
    for r in reference {
        let r_kw = is_keyword(r);
        let mut row = Vec::with_capacity(hyp.len() + 1);
        row.push(add(prev[0], r_kw));
        for (j, h) in hyp.iter().enumerate() {
            let diag = if r == h { prev[j] } else { add(prev[j], r_kw) };
            let del = add(prev[j + 1], r_kw);
            let ins = add(row[j], is_keyword(h));
            row.push(diag.min(del).min(ins));
        }
        prev = row;
    }
    prev[hyp.len()]
}

/// Classic word error rate: edits over reference length.
pub fn word_error_rate(hyp: &[String], reference: &[String]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Invalid(
            "word error rate needs a nonempty reference".into(),
        ));
    }
    Ok(alignment_errors(hyp, reference, |_| false).0 as f64 / reference.len() as f64)
}

/// Keyword errors over the number of keyword occurrences in `reference`.
pub fn keyword_wer<S: AsRef<str>>(
    hyp: &[String],
    reference: &[String],
    keywords: &[S],
) -> Result<f64> {
    let keywords: HashSet<String> = keywords.iter().map(|k| k.as_ref().to_lowercase()).collect();
    let occurrences = reference.iter().filter(|t| keywords.contains(*t)).count();
    if occurrences == 0 {
        return Err(Error::Invalid(format!(
            "keyword WER undefined: reference {:?} contains no keyword",
            reference.join(" ")
        )));
    }
    let (_, errors) = alignment_errors(hyp, reference, |t| keywords.contains(t));
    Ok(errors as f64 / occurrences as f64)
}

pub fn to_hyp_string(lists: &[HypothesisList]) -> String {
    let mut out = String::new();
    for (i, list) in lists.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "UTT {}", list.id);
        let _ = writeln!(out, "REF {}", list.reference.join(" "));
        for h in &list.hypotheses {
            let _ = writeln!(out, "HYP {} {}", h.rank, h.text());
        }
    }
    out
}

/// Parses the `UTT` / `REF` / `HYP` block format.
pub fn parse_hyps(text: &str, source: &str) -> Result<Vec<HypothesisList>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lists = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    loop {
        while lines.peek().is_some_and(|(_, l)| l.trim().is_empty()) {
            lines.next();
        }
        let Some((start, utt)) = lines.next() else {
            break;
        };
        let id = utt
            .strip_prefix("UTT ")
            .map(str::trim)
            .filter(|id| !id.is_empty())
            .ok_or_else(|| err(start, format!("expected `UTT <id>`, got {utt:?}")))?;
        let (ref_line, reference) = match lines.next() {
            Some((n, l)) if l == "REF" || l.starts_with("REF ") => (n, tokenize(&l[3..])),
            Some((n, l)) => return Err(err(n, format!("expected `REF <tokens>`, got {l:?}"))),
            None => return Err(err(start + 1, format!("{id}: missing REF line"))),
        };
        let mut hypotheses = Vec::new();
        while let Some(&(n, l)) = lines.peek() {
            if l.trim().is_empty() {
                break;
            }
            let rest = l
                .strip_prefix("HYP ")
                .ok_or_else(|| err(n, format!("expected `HYP <rank> <tokens>`, got {l:?}")))?;
            let (rank, words) = rest.split_once(' ').unwrap_or((rest, ""));
            let rank = rank
                .parse()
                .map_err(|_| err(n, format!("bad hypothesis rank {rank:?}")))?;
            hypotheses.push(Hypothesis::new(rank, words));
            lines.next();
        }
        let list = HypothesisList::new(id, reference, hypotheses)
            .map_err(|e| err(ref_line, e.to_string()))?;
        lists.push(list);
    }
    Ok(lists)
}

pub fn save_hypotheses(lists: &[HypothesisList], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_hyp_string(lists)).map_err(|e| Error::io(path, e))
}

pub fn load_hypotheses(path: impl AsRef<Path>) -> Result<Vec<HypothesisList>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hyps(&text, &path.display().to_string())
}

/// Knobs of the synthetic n-best generator.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisSpec {
    pub beam: usize,
    /// Share of utterances whose correct transcript sits below rank 0.
    pub lower_rank_fraction: f64,
    /// Probability that a wrong hypothesis swaps the keyword for another
    /// vocabulary keyword rather than a near-miss spelling.
    pub confusable_rate: f64,
    /// Probability that a hypothesis ranked after the correct one repeats it
    /// with another keyword inserted.
    pub insertion_rate: f64,
    /// Inclusive range of filler words on each side of the keyword.
    pub filler: (usize, usize),
    pub seed: u64,
}

impl Default for HypothesisSpec {
    fn default() -> Self {
        HypothesisSpec {
            beam: DEFAULT_BEAM,
            lower_rank_fraction: 0.5,
            confusable_rate: 0.5,
            insertion_rate: 0.1,
            filler: (1, 4),
            seed: 0,
        }
    }
}

impl HypothesisSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("hypothesis spec: {m}")));
        if self.beam == 0 {
            return bad("beam must be positive");
        }
        for (name, p) in [
            ("lower_rank_fraction", self.lower_rank_fraction),
            ("confusable_rate", self.confusable_rate),
            ("insertion_rate", self.insertion_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.beam == 1 && self.lower_rank_fraction > 0.0 {
            return bad("a beam of 1 cannot hold the correct transcript below rank 0");
        }
        if self.filler.0 > self.filler.1 {
            return bad("filler range must be nonempty");
        }
        Ok(())
    }
}

const FILLER: [&str; 20] = [
    "was", "near", "the", "bed", "and", "he", "said", "to", "of", "in", "it", "that", "she",
    "with", "his", "her", "at", "on", "old", "man",
];
const LETTERS: &[u8] = b"aeiourntlsdk";

/// A misspelling of `word` that is neither `word` nor in `avoid`.
fn near_miss(word: &str, avoid: &[String], rng: &mut impl Rng) -> String {
    let mut chars: Vec<u8> = word.bytes().collect();
    loop {
        let i = rng.random_range(0..chars.len());
        let c = *LETTERS.choose(rng).expect("letters");
        match rng.random_range(0..3) {
            0 => chars[i] = c,
            1 if chars.len() > 2 => {
                chars.remove(i);
            }
            _ => chars.insert(i, c),
        }
        let candidate = String::from_utf8(chars.clone()).expect("ascii");
        if candidate != word && !avoid.contains(&candidate) {
            return candidate;
        }
    }
}

/// One beam per corpus utterance, keyed by the utterance's file stem. The
/// reference is filler words around the utterance's keyword.
pub fn generate_hypotheses(corpus: &Corpus, spec: &HypothesisSpec) -> Result<Vec<HypothesisList>> {
    spec.validate()?;
    let mut r = rng::stream(spec.seed, "hypotheses");
    let vocabulary = &corpus.class_names;
    let filler: Vec<&str> = FILLER
        .iter()
        .copied()
        .filter(|w| !vocabulary.iter().any(|v| v == w))
        .collect();
    let items: Vec<(usize, usize)> = (0..corpus.num_classes())
        .flat_map(|c| (0..corpus.utterances[c].len()).map(move |u| (c, u)))
        .collect();
    let lowered = (spec.lower_rank_fraction * items.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut r);
    let mut demoted = vec![false; items.len()];
    for &i in &order[..lowered] {
        demoted[i] = true;
    }

    let mut lists = Vec::with_capacity(items.len());
    for (i, &(c, u)) in items.iter().enumerate() {
        let keyword = &vocabulary[c];
        let before = r.random_range(spec.filler.0..=spec.filler.1);
        let after = r.random_range(spec.filler.0..=spec.filler.1);
        let mut reference: Vec<String> = Vec::with_capacity(before + after + 1);
        reference.extend((0..before).map(|_| filler.choose(&mut r).expect("filler").to_string()));
        let slot = reference.len();
        reference.push(keyword.clone());
        reference.extend((0..after).map(|_| filler.choose(&mut r).expect("filler").to_string()));

        let others: Vec<&String> = vocabulary.iter().filter(|v| *v != keyword).collect();
        let correct = if demoted[i] {
            r.random_range(1..spec.beam)
        } else {
            0
        };
        let mut hypotheses = Vec::with_capacity(spec.beam);
        for rank in 0..spec.beam {
            let mut tokens = reference.clone();
            if rank > correct && r.random_bool(spec.insertion_rate) && !others.is_empty() {
                let at = r.random_range(0..=tokens.len());
                tokens.insert(at, others.choose(&mut r).expect("others").to_string());
            } else if rank != correct {
                tokens[slot] = if !others.is_empty() && r.random_bool(spec.confusable_rate) {
                    others.choose(&mut r).expect("others").to_string()
                } else {
                    near_miss(keyword, vocabulary, &mut r)
                };
            }
            hypotheses.push(Hypothesis { rank, tokens });
        }
        lists.push(HypothesisList::new(
            item_id(keyword, u),
            reference,
            hypotheses,
        )?);
    }
    Ok(lists)
}

/// Mean keyword WER for one `(agent, N, k)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct WerRow {
    pub agent: String,
    pub n: usize,
    pub k: usize,
    pub keyword_wer: f64,
}

pub const VANILLA: &str = "vanilla";

/// Keyword WER of the rank-0 hypotheses (`vanilla`) and of each spotter's
/// reranked choice, over the grid's shared episodes. Per cell the WER is
/// averaged over the queries of a run, then over runs.
pub fn wer_grid(
    corpus: &Corpus,
    hyps: &[HypothesisList],
    spotters: &[&dyn Spotter],
    grid: &GridConfig,
) -> Result<Vec<WerRow>> {
    if grid.runs == 0 || grid.n_list.is_empty() || grid.k_list.is_empty() {
        return Err(Error::Config(
            "grid needs N and k values and at least one run".into(),
        ));
    }
    let find = |id: &str| {
        hyps.iter()
            .find(|l| l.id == id)
            .ok_or_else(|| Error::Insufficient(format!("no hypotheses for utterance {id}")))
    };
    let vocabulary = &corpus.class_names;
    let mut rows = Vec::new();
    for &n in &grid.n_list {
        for &k in &grid.k_list {
            let mut sums = vec![0.0; spotters.len() + 1];
            for run in 0..grid.runs {
                let episode = grid_episode(corpus, grid, n, k, run)?;
                let supports = episode.support_set(corpus, grid.width)?;
                let mut run_sums = vec![0.0; spotters.len() + 1];
                for (q, &(c, u)) in episode.queries.iter().enumerate() {
                    let list = find(&item_id(&vocabulary[c], u))?;
                    run_sums[0] +=
                        keyword_wer(&list.vanilla().tokens, &list.reference, vocabulary)?;
                    for (s, spotter) in spotters.iter().enumerate() {
                        let spotted = spotter.spot_classes(episode.query(corpus, q), &supports)?;
                        let chosen = list.rerank(&spotted)?;
                        run_sums[s + 1] +=
                            keyword_wer(&chosen.chosen().tokens, &list.reference, vocabulary)?;
                    }
                }
                let queries = episode.queries.len() as f64;
                for (total, run_total) in sums.iter_mut().zip(run_sums) {
                    *total += run_total / queries;
                }
            }
            let names =
                std::iter::once(VANILLA.to_string()).chain(spotters.iter().map(|s| s.name()));
            for (agent, total) in names.zip(sums) {
                rows.push(WerRow {
                    agent,
                    n,
                    k,
                    keyword_wer: total / grid.runs as f64,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV `agent,N,k,keyword_wer`.
pub fn wer_csv(rows: &[WerRow]) -> String {
    let mut out = String::from("agent,N,k,keyword_wer\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.6}", r.agent, r.n, r.k, r.keyword_wer);
    }
    out
}
