//! The four metric-space scoring agents and the sliding-window spotting loop.
//!
//! Every agent scores one (query window, support window) pair at a time. A
//! class score is the maximum of that pair score over all supports of the
//! class and all windows of the utterance; a class is spotted when its score
//! reaches the threshold.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::autodiff::{cosine_forward, lstm_sequence, LstmVars, ModelParams, ParamId, Tape, Var};
use crate::embeddings::{clip_window, windows, EmbeddingSequence, WindowSpec, MIN_WINDOW};
use crate::encoder::{encoded_len, glorot_uniform, EncoderParams, FILTERS};
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

pub const RELATION_HIDDEN: usize = 64;
pub const MATCHING_HIDDEN: usize = 32;

/// Default threshold for the cosine-scored agents.
pub const COSINE_THRESHOLD: f64 = 0.8;
/// Default threshold for the sigmoid-scored agents.
pub const SIGMOID_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Siamese,
    Relation,
    Proto,
    Matching,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::Siamese,
        AgentKind::Relation,
        AgentKind::Proto,
        AgentKind::Matching,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Siamese => "siamese",
            AgentKind::Relation => "relation",
            AgentKind::Proto => "proto",
            AgentKind::Matching => "matching",
        }
    }

    pub fn default_threshold(self) -> f64 {
        match self {
            AgentKind::Siamese | AgentKind::Proto => COSINE_THRESHOLD,
            AgentKind::Relation | AgentKind::Matching => SIGMOID_THRESHOLD,
        }
    }

    /// Whether the pair score is a learned sigmoid output (trained with cross-entropy).
    pub fn has_learned_similarity(self) -> bool {
        matches!(self, AgentKind::Relation | AgentKind::Matching)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "siamese" => Ok(AgentKind::Siamese),
            "relation" => Ok(AgentKind::Relation),
            "proto" | "prototypical" => Ok(AgentKind::Proto),
            "matching" => Ok(AgentKind::Matching),
            other => Err(Error::Config(format!(
                "unknown agent {other:?} (expected siamese, relation, proto or matching)"
            ))),
        }
    }
}

/// How the prototypical agent builds its class prototype.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PrototypeMode {
    /// Mean of the encoded supports.
    #[default]
    MeanOfEncodings,
    /// Encoding of the frame-wise mean of the raw support windows.
    EncodingOfMean,
}

impl FromStr for PrototypeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoded" | "mean_of_encodings" => Ok(PrototypeMode::MeanOfEncodings),
            "raw" | "encoding_of_mean" => Ok(PrototypeMode::EncodingOfMean),
            other => Err(Error::Config(format!(
                "unknown prototype mode {other:?} (expected encoded or raw)"
            ))),
        }
    }
}

/// Relation head: `dense(40 -> 64, tanh) -> dense(64 -> 1, sigmoid)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelationHead {
    pub hidden_weights: ParamId,
    pub hidden_bias: ParamId,
    pub out_weights: ParamId,
    pub out_bias: ParamId,
}

/// Matching head: LSTM over attention rows, then `dense(32 -> 1, sigmoid)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchingHead {
    pub lstm_weights: ParamId,
    pub lstm_bias: ParamId,
    pub out_weights: ParamId,
    pub out_bias: ParamId,
    /// Attention row length: encoded support frames.
    pub row_len: usize,
}

/// Trainable weights of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentParams {
    pub kind: AgentKind,
    pub window: usize,
    pub store: ModelParams,
    pub encoder: EncoderParams,
    pub relation: Option<RelationHead>,
    pub matching: Option<MatchingHead>,
    pub prototype: PrototypeMode,
    /// Seed the weights were initialized from.
    pub seed: u64,
    /// Optimizer steps applied so far.
    pub steps: u64,
}

impl AgentParams {
    /// Fresh seeded weights for `kind` at embedding dimension `dim` and window width `window`.
    pub fn init(kind: AgentKind, dim: usize, window: usize, seed: u64) -> Result<Self> {
        Self::build(kind, dim, window, seed, true)
    }

    /// All-zero weights with the layout of `kind`.
    pub fn zeros(kind: AgentKind, dim: usize, window: usize) -> Result<Self> {
        Self::build(kind, dim, window, 0, false)
    }

    fn build(kind: AgentKind, dim: usize, window: usize, seed: u64, random: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid(
                "embedding dimension must be positive".into(),
            ));
        }
        if window < MIN_WINDOW {
            return Err(Error::Invalid(format!(
                "window {window} below the encoder minimum {MIN_WINDOW}"
            )));
        }
        let mut r = rng::stream(seed, &format!("init/{kind}"));
        let mut store = ModelParams::new();
        let tensor = |shape: &[usize], r: &mut rng::StreamRng| {
            if random {
                glorot_uniform(shape, r)
            } else {
                Tensor::zeros(shape)
            }
        };
        let encoder = if random {
            EncoderParams::init(&mut store, "enc", dim, &mut r)
        } else {
            EncoderParams::zeros(&mut store, "enc", dim)
        };
        let relation = (kind == AgentKind::Relation).then(|| {
            let input = 2 * FILTERS;
            RelationHead {
                hidden_weights: store.add(
                    "rel.hidden.weights",
                    tensor(&[input, RELATION_HIDDEN], &mut r),
                ),
                hidden_bias: store.add("rel.hidden.bias", Tensor::zeros(&[RELATION_HIDDEN])),
                out_weights: store.add("rel.out.weights", tensor(&[RELATION_HIDDEN, 1], &mut r)),
                out_bias: store.add("rel.out.bias", Tensor::zeros(&[1])),
            }
        });
        let matching = (kind == AgentKind::Matching).then(|| {
            let row_len = encoded_len(window);
            let rows = row_len + MATCHING_HIDDEN;
            MatchingHead {
                lstm_weights: store.add(
                    "match.lstm.weights",
                    tensor(&[rows, 4 * MATCHING_HIDDEN], &mut r),
                ),
                lstm_bias: store.add("match.lstm.bias", Tensor::zeros(&[4 * MATCHING_HIDDEN])),
                out_weights: store.add("match.out.weights", tensor(&[MATCHING_HIDDEN, 1], &mut r)),
                out_bias: store.add("match.out.bias", Tensor::zeros(&[1])),
                row_len,
            }
        });
        Ok(AgentParams {
            kind,
            window,
            store,
            encoder,
            relation,
            matching,
            prototype: PrototypeMode::default(),
            seed,
            steps: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn num_scalars(&self) -> usize {
        self.store.num_scalars()
    }

    fn relation_head(&self) -> Result<RelationHead> {
        self.relation.ok_or(Error::MissingHead {
            agent: self.kind.name(),
            head: "relation",
        })
    }

    fn matching_head(&self) -> Result<MatchingHead> {
        self.matching.ok_or(Error::MissingHead {
            agent: self.kind.name(),
            head: "matching",
        })
    }

    /// Relation score of two encoded vectors, recorded on `tape`.
    pub fn relation_var(&self, tape: &mut Tape, query: Var, support: Var) -> Result<Var> {
        let head = self.relation_head()?;
        let joined = tape.concat(query, support)?;
        let w1 = tape.param(&self.store, head.hidden_weights);
        let b1 = tape.param(&self.store, head.hidden_bias);
        let w2 = tape.param(&self.store, head.out_weights);
        let b2 = tape.param(&self.store, head.out_bias);
        let h = tape.dense(joined, w1, b1)?;
        let h = tape.tanh(h)?;
        let o = tape.dense(h, w2, b2)?;
        tape.sigmoid(o)
    }

    /// Matching score of two encoded sequences, recorded on `tape`.
    pub fn matching_var(&self, tape: &mut Tape, query: Var, support: Var) -> Result<Var> {
        let head = self.matching_head()?;
        let att = tape.matmul_nt(query, support)?;
        let att = tape.scale(att, 1.0 / (FILTERS as f64).sqrt())?;
        let att = tape.softmax_rows(att)?;
        let rows = tape.fit_cols(att, head.row_len)?;
        let lstm = LstmVars {
            weights: tape.param(&self.store, head.lstm_weights),
            bias: tape.param(&self.store, head.lstm_bias),
            hidden: MATCHING_HIDDEN,
        };
        let state = lstm_sequence(tape, rows, lstm)?;
        let w = tape.param(&self.store, head.out_weights);
        let b = tape.param(&self.store, head.out_bias);
        let o = tape.dense(state, w, b)?;
        tape.sigmoid(o)
    }

    /// Scaled dot-product attention of an encoded query sequence over an encoded support sequence.
    pub fn attention(query: &Tensor, support: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let (q, s) = (tape.constant(query.clone()), tape.constant(support.clone()));
        let att = tape.matmul_nt(q, s)?;
        let att = tape.scale(att, 1.0 / (FILTERS as f64).sqrt())?;
        let att = tape.softmax_rows(att)?;
        Ok(tape.value(att)?.clone())
    }

    /// Pair score of `kind` for a query window and a support window, recorded
    /// on `tape` from raw windows. Siamese and Proto both score by cosine.
    pub fn pair_score_var(&self, tape: &mut Tape, query: Var, support: Var) -> Result<Var> {
        match self.kind {
            AgentKind::Siamese | AgentKind::Proto => {
                let q = self.encoder.encode_vector_var(tape, &self.store, query)?;
                let s = self.encoder.encode_vector_var(tape, &self.store, support)?;
                tape.cosine(q, s)
            }
            AgentKind::Relation => {
                let q = self.encoder.encode_vector_var(tape, &self.store, query)?;
                let s = self.encoder.encode_vector_var(tape, &self.store, support)?;
                self.relation_var(tape, q, s)
            }
            AgentKind::Matching => {
                let q = self.encoder.encode_sequence_var(tape, &self.store, query)?;
                let s = self
                    .encoder
                    .encode_sequence_var(tape, &self.store, support)?;
                self.matching_var(tape, q, s)
            }
        }
    }

    /// Pair score from raw windows, computed from scratch.
    pub fn pair_score(&self, query: &Tensor, support: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let (q, s) = (tape.constant(query.clone()), tape.constant(support.clone()));
        let v = self.pair_score_var(&mut tape, q, s)?;
        Ok(tape.value(v)?.item())
    }

    fn relation_of(&self, query: &Tensor, support: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let (q, s) = (tape.constant(query.clone()), tape.constant(support.clone()));
        let v = self.relation_var(&mut tape, q, s)?;
        Ok(tape.value(v)?.item())
    }

    fn matching_of(&self, query: &Tensor, support: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let (q, s) = (tape.constant(query.clone()), tape.constant(support.clone()));
        let v = self.matching_var(&mut tape, q, s)?;
        Ok(tape.value(v)?.item())
    }

    /// Prototype of a class: see [`PrototypeMode`].
    pub fn prototype(&self, supports: &[Tensor]) -> Result<Tensor> {
        if supports.is_empty() {
            return Err(Error::Invalid("prototype of an empty support list".into()));
        }
        let mut tape = Tape::new();
        let proto = match self.prototype {
            PrototypeMode::MeanOfEncodings => {
                let encoded = supports
                    .iter()
                    .map(|s| {
                        let v = tape.constant(s.clone());
                        self.encoder.encode_vector_var(&mut tape, &self.store, v)
                    })
                    .collect::<Result<Vec<_>>>()?;
                tape.mean(&encoded)?
            }
            PrototypeMode::EncodingOfMean => {
                let raw: Vec<Var> = supports.iter().map(|s| tape.constant(s.clone())).collect();
                let mean = tape.mean(&raw)?;
                self.encoder
                    .encode_vector_var(&mut tape, &self.store, mean)?
            }
        };
        Ok(tape.value(proto)?.clone())
    }

    /// Max over supports of the Siamese cosine score.
    pub fn score_siamese(&self, query: &Tensor, supports: &[Tensor]) -> Result<WindowScore> {
        let q = self.encoder.encode_vector(&self.store, query)?;
        let encoded = self.encode_vectors(supports)?;
        best_of(encoded.iter().map(|s| cosine_forward(q.data(), s.data())))
    }

    /// Max over supports of the learned relation score.
    pub fn score_relation(&self, query: &Tensor, supports: &[Tensor]) -> Result<WindowScore> {
        self.relation_head()?;
        let q = self.encoder.encode_vector(&self.store, query)?;
        let encoded = self.encode_vectors(supports)?;
        best_of(encoded.iter().map(|s| self.relation_of(&q, s)))
    }

    /// Cosine score against the class prototype; no single best support.
    pub fn score_proto(&self, query: &Tensor, supports: &[Tensor]) -> Result<WindowScore> {
        let q = self.encoder.encode_vector(&self.store, query)?;
        let proto = self.prototype(supports)?;
        Ok(WindowScore {
            score: cosine_forward(q.data(), proto.data())?,
            support: None,
        })
    }

    /// Max over supports of the attention-alignment score.
    pub fn score_matching(&self, query: &Tensor, supports: &[Tensor]) -> Result<WindowScore> {
        self.matching_head()?;
        let q = self.encoder.encode_sequence(&self.store, query)?;
        let encoded = supports
            .iter()
            .map(|s| self.encoder.encode_sequence(&self.store, s))
            .collect::<Result<Vec<_>>>()?;
        best_of(encoded.iter().map(|s| self.matching_of(&q, s)))
    }

    /// Score of one query window against one class's supports, by agent kind.
    pub fn score(&self, query: &Tensor, supports: &[Tensor]) -> Result<WindowScore> {
        match self.kind {
            AgentKind::Siamese => self.score_siamese(query, supports),
            AgentKind::Relation => self.score_relation(query, supports),
            AgentKind::Proto => self.score_proto(query, supports),
            AgentKind::Matching => self.score_matching(query, supports),
        }
    }

    fn encode_vectors(&self, windows: &[Tensor]) -> Result<Vec<Tensor>> {
        if windows.is_empty() {
            return Err(Error::Invalid("empty support list".into()));
        }
        windows
            .iter()
            .map(|w| self.encoder.encode_vector(&self.store, w))
            .collect()
    }

    /// Spots keywords of `supports` in `utterance`: per class, the maximum
    /// score over all windows and supports, kept when it reaches `threshold`.
    pub fn spot(
        &self,
        utterance: &EmbeddingSequence,
        supports: &SupportSet,
        spec: WindowSpec,
        threshold: f64,
    ) -> Result<SpotResult> {
        if utterance.dim() != supports.dim() || utterance.dim() != self.dim() {
            return Err(Error::shape(
                "spot",
                format!(
                    "utterance dim {}, support dim {}, agent dim {}",
                    utterance.dim(),
                    supports.dim(),
                    self.dim()
                ),
            ));
        }
        let wins = windows(utterance, spec);
        let mut trace = Vec::new();
        let mut class_scores = Vec::with_capacity(supports.len());

        enum Encoded {
            Vectors(Vec<Tensor>),
            Sequences(Vec<Tensor>),
        }
        let encoded_windows = match self.kind {
            AgentKind::Matching => Encoded::Sequences(
                wins.iter()
                    .map(|w| self.encoder.encode_sequence(&self.store, &w.frames))
                    .collect::<Result<_>>()?,
            ),
            _ => Encoded::Vectors(
                wins.iter()
                    .map(|w| self.encoder.encode_vector(&self.store, &w.frames))
                    .collect::<Result<_>>()?,
            ),
        };

        for (class, class_supports) in supports.iter() {
            // pair scores: [window][support]
            let grid: Vec<Vec<f64>> = match (&encoded_windows, self.kind) {
                (Encoded::Vectors(ws), AgentKind::Proto) => {
                    let proto = self.prototype(class_supports)?;
                    ws.iter()
                        .map(|w| Ok(vec![cosine_forward(w.data(), proto.data())?]))
                        .collect::<Result<_>>()?
                }
                (Encoded::Vectors(ws), kind) => {
                    let ss = self.encode_vectors(class_supports)?;
                    ws.iter()
                        .map(|w| {
                            ss.iter()
                                .map(|s| match kind {
                                    AgentKind::Relation => self.relation_of(w, s),
                                    _ => cosine_forward(w.data(), s.data()),
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<_>>()?
                }
                (Encoded::Sequences(ws), _) => {
                    let ss = class_supports
                        .iter()
                        .map(|s| self.encoder.encode_sequence(&self.store, s))
                        .collect::<Result<Vec<_>>>()?;
                    ws.iter()
                        .map(|w| ss.iter().map(|s| self.matching_of(w, s)).collect())
                        .collect::<Result<_>>()?
                }
            };

            let proto = self.kind == AgentKind::Proto;
            let mut best: Option<SpotScore> = None;
            for (wi, row) in grid.iter().enumerate() {
                for (si, &score) in row.iter().enumerate() {
                    let support = (!proto).then_some(si);
                    trace.push(TraceRow {
                        window_offset: wins[wi].offset,
                        class: class.clone(),
                        support,
                        score,
                    });
                    // strict comparison keeps the earliest window, then earliest support
                    if best.as_ref().is_none_or(|b| score > b.score) {
                        best = Some(SpotScore {
                            class: class.clone(),
                            score,
                            window: wi,
                            window_offset: wins[wi].offset,
                            support,
                        });
                    }
                }
            }
            class_scores.push(best.expect("at least one window and support"));
        }

        let mut keywords: Vec<SpotScore> = class_scores
            .iter()
            .filter(|s| s.score >= threshold)
            .cloned()
            .collect();
        keywords.sort_by(|a, b| b.score.total_cmp(&a.score));
        Ok(SpotResult {
            keywords: KeywordList(keywords),
            class_scores,
            trace,
        })
    }
}

/// Best pair score of one query window against one class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowScore {
    pub score: f64,
    /// Index of the best support; `None` for prototype scoring.
    pub support: Option<usize>,
}

fn best_of(scores: impl Iterator<Item = Result<f64>>) -> Result<WindowScore> {
    let mut best: Option<WindowScore> = None;
    for (i, s) in scores.enumerate() {
        let s = s?;
        if best.is_none_or(|b| s > b.score) {
            best = Some(WindowScore {
                score: s,
                support: Some(i),
            });
        }
    }
    best.ok_or_else(|| Error::Invalid("empty support list".into()))
}

/// Class score of one utterance: the best (window, support) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SpotScore {
    pub class: String,
    pub score: f64,
    /// Index of the best window.
    pub window: usize,
    pub window_offset: usize,
    pub support: Option<usize>,
}

/// Spotted classes in descending score order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeywordList(pub Vec<SpotScore>);

impl KeywordList {
    pub fn classes(&self) -> Vec<&str> {
        self.0.iter().map(|s| s.class.as_str()).collect()
    }

    pub fn contains(&self, class: &str) -> bool {
        self.0.iter().any(|s| s.class == class)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub window_offset: usize,
    pub class: String,
    pub support: Option<usize>,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpotResult {
    pub keywords: KeywordList,
    /// Best score of every class, in support-set order.
    pub class_scores: Vec<SpotScore>,
    /// Every (window, class, support) score.
    pub trace: Vec<TraceRow>,
}

/// Renders a trace as CSV `window_offset,class_id,support_idx,score`
/// (`support_idx` is -1 for prototype scores).
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("window_offset,class_id,support_idx,score\n");
    for r in trace {
        let support = r.support.map_or(-1, |s| s as i64);
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.window_offset,
            r.class,
            support,
            crate::embeddings::format_real(r.score)
        ));
    }
    out
}

/// Per-class support windows, in a fixed class order.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSet {
    classes: Vec<(String, Vec<Tensor>)>,
}

impl SupportSet {
    pub fn new(classes: Vec<(String, Vec<Tensor>)>) -> Result<Self> {
        let first = classes
            .first()
            .and_then(|(_, s)| s.first())
            .ok_or_else(|| Error::Invalid("support set needs at least one class".into()))?;
        let shape = first.shape().to_vec();
        if shape.len() != 2 {
            return Err(Error::shape("support set", format!("{shape:?}")));
        }
        for (name, supports) in &classes {
            if supports.is_empty() {
                return Err(Error::Invalid(format!("class {name} has no supports")));
            }
            if let Some(bad) = supports.iter().find(|s| s.shape() != shape.as_slice()) {
                return Err(Error::shape(
                    "support set",
                    format!("class {name}: {:?} vs {shape:?}", bad.shape()),
                ));
            }
        }
        for (i, (name, _)) in classes.iter().enumerate() {
            if classes[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Invalid(format!("duplicate class {name}")));
            }
        }
        Ok(SupportSet { classes })
    }

    /// Builds supports from keyword clips, each reduced to one `width`-frame window.
    pub fn from_clips<'a>(
        classes: impl IntoIterator<Item = (String, Vec<&'a EmbeddingSequence>)>,
        width: usize,
    ) -> Result<Self> {
        Self::new(
            classes
                .into_iter()
                .map(|(name, clips)| {
                    let ws = clips.into_iter().map(|c| clip_window(c, width)).collect();
                    (name, ws)
                })
                .collect(),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &[Tensor])> {
        self.classes.iter().map(|(n, s)| (n, s.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_names(&self) -> Vec<&str> {
        self.classes.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn get(&self, class: &str) -> Option<&[Tensor]> {
        self.classes
            .iter()
            .find(|(n, _)| n == class)
            .map(|(_, s)| s.as_slice())
    }

    pub fn dim(&self) -> usize {
        self.classes[0].1[0].cols()
    }

    pub fn width(&self) -> usize {
        self.classes[0].1[0].rows()
    }

    /// A copy with one extra support appended to `class`.
    pub fn with_extra_support(&self, class: &str, support: Tensor) -> Result<Self> {
        let mut classes = self.classes.clone();
        let entry = classes
            .iter_mut()
            .find(|(n, _)| n == class)
            .ok_or_else(|| Error::Invalid(format!("unknown class {class}")))?;
        entry.1.push(support);
        Self::new(classes)
    }
}

/// Random tensor helper for tests and property checks.
pub fn random_window(width: usize, dim: usize, rng: &mut impl Rng) -> Tensor {
    Tensor::new(
        vec![width, dim],
        (0..width * dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
    .expect("window shape")
}
