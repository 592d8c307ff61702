//! Embedding sequences: the EMB v1 file format, sliding windows, and a seeded
//! synthetic corpus that stands in for encoder output on real speech.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

/// Smallest window the encoder stack accepts.
pub const MIN_WINDOW: usize = 8;

/// A `T x D` matrix of per-frame embeddings, optionally labelled with the
/// keyword it contains and the frame span of that keyword.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSequence {
    frames: Tensor,
    pub label: Option<String>,
    pub span: Option<(usize, usize)>,
}

impl EmbeddingSequence {
    pub fn new(frames: Tensor) -> Result<Self> {
        if frames.rank() != 2 {
            return Err(Error::shape(
                "embedding",
                format!("expected T x D frames, got {:?}", frames.shape()),
            ));
        }
        if !frames.is_finite() {
            return Err(Error::Invalid(
                "embedding contains non-finite values".into(),
            ));
        }
        Ok(EmbeddingSequence {
            frames,
            label: None,
            span: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!(
                "label {label:?} must be a non-empty word"
            )));
        }
        self.label = Some(label);
        Ok(self)
    }

    pub fn with_span(mut self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Invalid(format!(
                "span {start}:{end} outside 0..{}",
                self.len()
            )));
        }
        self.span = Some((start, end));
        Ok(self)
    }

    pub fn frames(&self) -> &Tensor {
        &self.frames
    }

    /// Frames inside the labelled span, or every frame when there is no span.
    pub fn keyword_frames(&self) -> Tensor {
        let (start, end) = self.span.unwrap_or((0, self.len()));
        let d = self.dim();
        Tensor::new(
            vec![end - start, d],
            self.frames.data()[start * d..end * d].to_vec(),
        )
        .expect("span within sequence")
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }

    /// Appends frames from `other` (same dimension). Label and span are kept.
    pub fn extended(&self, other: &Tensor) -> Result<Self> {
        if other.rank() != 2 || other.cols() != self.dim() {
            return Err(Error::shape(
                "extend",
                format!("dim {} vs {:?}", self.dim(), other.shape()),
            ));
        }
        let mut data = self.frames.data().to_vec();
        data.extend_from_slice(other.data());
        let frames = Tensor::new(vec![self.len() + other.rows(), self.dim()], data)?;
        Ok(EmbeddingSequence {
            frames,
            label: self.label.clone(),
            span: self.span,
        })
    }

    /// Serializes to EMB v1 text.
    pub fn to_emb_string(&self) -> String {
        let mut out = format!("EMB v1 dim={} frames={}\n", self.dim(), self.len());
        for t in 0..self.len() {
            push_reals(&mut out, self.frames.row(t));
            out.push('\n');
        }
        let mut meta = Vec::new();
        if let Some(label) = &self.label {
            meta.push(format!("label={label}"));
        }
        if let Some((s, e)) = self.span {
            meta.push(format!("span={s}:{e}"));
        }
        if !meta.is_empty() {
            out.push_str(&meta.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses EMB v1 text; `source` names the input in error messages.
    pub fn parse_emb(text: &str, source: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (dim, frames) = match fields.as_slice() {
            ["EMB", "v1", d, f] => {
                let dim = header_value(d, "dim").map_err(|m| err(1, m))?;
                let frames = header_value(f, "frames").map_err(|m| err(1, m))?;
                (dim, frames)
            }
            _ => {
                return Err(err(
                    1,
                    format!("expected `EMB v1 dim=<D> frames=<T>`, got {header:?}"),
                ))
            }
        };
        if dim == 0 || frames == 0 {
            return Err(err(1, "dim and frames must be positive".into()));
        }
        let mut data = Vec::with_capacity(dim * frames);
        for t in 0..frames {
            let lineno = t + 2;
            let line = lines
                .next()
                .ok_or_else(|| err(lineno, format!("expected {frames} frame lines, found {t}")))?;
            let row = parse_reals(line).map_err(|m| err(lineno, m))?;
            if row.len() != dim {
                return Err(err(
                    lineno,
                    format!("expected {dim} values, found {}", row.len()),
                ));
            }
            data.extend(row);
        }
        let tensor = Tensor::new(vec![frames, dim], data).map_err(|e| err(1, e.to_string()))?;
        let mut seq = EmbeddingSequence::new(tensor).map_err(|e| err(2, e.to_string()))?;
        let mut lineno = frames + 1;
        for line in lines {
            lineno += 1;
            if line.trim().is_empty() {
                continue;
            }
            for field in line.split_whitespace() {
                if let Some(label) = field.strip_prefix("label=") {
                    seq = seq
                        .with_label(label)
                        .map_err(|e| err(lineno, e.to_string()))?;
                } else if let Some(span) = field.strip_prefix("span=") {
                    let (s, e) = span
                        .split_once(':')
                        .ok_or_else(|| err(lineno, format!("bad span {span:?}")))?;
                    let parse = |v: &str| {
                        v.parse::<usize>()
                            .map_err(|_| err(lineno, format!("bad span bound {v:?}")))
                    };
                    let (s, e) = (parse(s)?, parse(e)?);
                    seq = seq
                        .with_span(s, e)
                        .map_err(|x| err(lineno, x.to_string()))?;
                } else {
                    return Err(err(lineno, format!("unexpected trailing field {field:?}")));
                }
            }
        }
        Ok(seq)
    }
}

fn header_value(field: &str, key: &str) -> std::result::Result<usize, String> {
    field
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| format!("expected `{key}=<int>`, got {field:?}"))?
        .parse()
        .map_err(|_| format!("`{key}` is not a non-negative integer in {field:?}"))
}

/// Formats a real with 9 significant digits, the precision of every text format here.
pub fn format_real(v: f64) -> String {
    format!("{v:.8e}")
}

pub(crate) fn push_reals(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:.8e}");
    }
}

pub(crate) fn parse_reals(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|tok| {
            // accept the typographic minus some tools emit
            let cleaned = tok.replace('\u{2212}', "-");
            match cleaned.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("non-numeric or non-finite token {tok:?}")),
            }
        })
        .collect()
}

pub fn load_embedding(path: impl AsRef<Path>) -> Result<EmbeddingSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingSequence::parse_emb(&text, &path.display().to_string())
}

pub fn save_embedding(seq: &EmbeddingSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, seq.to_emb_string()).map_err(|e| Error::io(path, e))
}

/// Window width and hop, both in frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    width: usize,
    hop: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { width: 16, hop: 4 }
    }
}

impl WindowSpec {
    pub fn new(width: usize, hop: usize) -> Result<Self> {
        if width < MIN_WINDOW {
            return Err(Error::Invalid(format!(
                "window width {width} below the encoder minimum {MIN_WINDOW}"
            )));
        }
        if hop == 0 || hop > width {
            return Err(Error::Invalid(format!("hop {hop} must lie in 1..={width}")));
        }
        Ok(WindowSpec { width, hop })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn hop(&self) -> usize {
        self.hop
    }
}

/// Start offsets of all full windows of `width` over `len` frames at `hop`.
/// A sequence shorter than one window yields the single offset 0.
pub fn window_offsets(len: usize, width: usize, hop: usize) -> Vec<usize> {
    if len < width {
        return vec![0];
    }
    (0..=(len - width) / hop).map(|i| i * hop).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub offset: usize,
    /// `W x D`
    pub frames: Tensor,
}

/// Slices `seq` into windows; a sequence shorter than the width becomes one
/// window right-padded with zero frames.
pub fn windows(seq: &EmbeddingSequence, spec: WindowSpec) -> Vec<Window> {
    let (w, d) = (spec.width, seq.dim());
    window_offsets(seq.len(), w, spec.hop)
        .into_iter()
        .map(|offset| {
            let mut data = vec![0.0; w * d];
            let available = (seq.len() - offset).min(w);
            data[..available * d]
                .copy_from_slice(&seq.frames.data()[offset * d..(offset + available) * d]);
            Window {
                offset,
                frames: Tensor::new(vec![w, d], data).expect("window shape"),
            }
        })
        .collect()
}

/// The leading window of a clip: zero-padded when short, truncated when long.
pub fn clip_window(clip: &EmbeddingSequence, width: usize) -> Tensor {
    let spec = WindowSpec {
        width,
        hop: width.max(1),
    };
    windows(clip, spec).swap_remove(0).frames
}

/// Parameters of the synthetic keyword corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpusSpec {
    pub classes: usize,
    /// Inclusive template length range in frames.
    pub template_len: (usize, usize),
    /// Inclusive range of total background frames around the keyword.
    pub background_len: (usize, usize),
    /// Inclusive range of background frames around each support clip.
    pub clip_context: (usize, usize),
    /// Per-component Gaussian jitter added to every keyword instance.
    pub sigma: f64,
    /// Per-component standard deviation of background frames.
    pub background_sigma: f64,
    /// Maximum relative time stretch of instances; 0 disables stretching.
    pub stretch: f64,
    pub dim: usize,
    pub clips_per_class: usize,
    pub utterances_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        let dim = 16;
        SyntheticCorpusSpec {
            classes: 10,
            template_len: (12, 16),
            background_len: (16, 32),
            clip_context: (0, 4),
            sigma: 0.1,
            background_sigma: 1.0 / (dim as f64).sqrt(),
            stretch: 0.0,
            dim,
            clips_per_class: 20,
            utterances_per_class: 4,
            seed: 0,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("corpus spec: {m}")));
        if self.classes == 0 || self.dim == 0 {
            return bad("classes and dim must be positive");
        }
        if self.template_len.0 == 0 || self.template_len.0 > self.template_len.1 {
            return bad("template length range must be nonempty and positive");
        }
        if self.background_len.0 > self.background_len.1
            || self.clip_context.0 > self.clip_context.1
        {
            return bad("background length ranges must be nonempty");
        }
        if !(self.sigma >= 0.0 && self.background_sigma >= 0.0) {
            return bad("noise levels must be non-negative");
        }
        if !(0.0..1.0).contains(&self.stretch) {
            return bad("stretch must lie in [0, 1)");
        }
        if self.clips_per_class == 0 || self.utterances_per_class == 0 {
            return bad("every class needs at least one clip and one utterance");
        }
        Ok(())
    }
}

/// A labelled keyword corpus: per class one latent template, isolated support
/// clips, and utterances with the keyword planted at a recorded span.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub class_names: Vec<String>,
    pub templates: Vec<EmbeddingSequence>,
    pub clips: Vec<Vec<EmbeddingSequence>>,
    pub utterances: Vec<Vec<EmbeddingSequence>>,
}

impl Corpus {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn dim(&self) -> usize {
        self.clips
            .iter()
            .flatten()
            .chain(self.utterances.iter().flatten())
            .next()
            .map(EmbeddingSequence::dim)
            .unwrap_or(0)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

const SYLLABLES: [&str; 24] = [
    "no", "ir", "ti", "er", "ka", "lo", "mi", "ra", "ve", "su", "dan", "bel", "tor", "an", "is",
    "mar", "el", "ru", "fen", "gal", "pro", "me", "the", "us",
];

/// `count` distinct lowercase pseudo-names.
pub fn keyword_names(count: usize, rng: &mut impl Rng) -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(count);
    while names.len() < count {
        let parts = rng.random_range(2..=3);
        let name: String = (0..parts)
            .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
            .collect();
        if !names.contains(&name) {
            names.push(name);
        }
    }
    names
}

fn gaussian_frames(rows: usize, dim: usize, sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; rows * dim];
    }
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    (0..rows * dim).map(|_| normal.sample(rng)).collect()
}

fn template(len: usize, dim: usize, rng: &mut impl Rng) -> Tensor {
    let mut data = gaussian_frames(len, dim, 1.0, rng);
    for row in data.chunks_mut(dim) {
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
    Tensor::new(vec![len, dim], data).expect("template shape")
}

/// A noisy, optionally time-stretched copy of `template`.
fn instance(template: &Tensor, spec: &SyntheticCorpusSpec, rng: &mut impl Rng) -> Tensor {
    let (len, dim) = (template.rows(), template.cols());
    let out_len = if spec.stretch > 0.0 {
        let factor = rng.random_range(1.0 - spec.stretch..=1.0 + spec.stretch);
        ((len as f64 * factor).round() as usize).max(1)
    } else {
        len
    };
    let noise = gaussian_frames(out_len, dim, spec.sigma, rng);
    let mut data = Vec::with_capacity(out_len * dim);
    for t in 0..out_len {
        // nearest-frame resampling: repeats frames when stretching, drops them when compressing
        let src = t * len / out_len;
        data.extend(
            template
                .row(src)
                .iter()
                .zip(&noise[t * dim..(t + 1) * dim])
                .map(|(a, n)| a + n),
        );
    }
    Tensor::new(vec![out_len, dim], data).expect("instance shape")
}

/// A fresh instance of `template` surrounded by a random amount of background,
/// with the keyword span recorded.
fn embedded(
    template: &Tensor,
    background_len: (usize, usize),
    spec: &SyntheticCorpusSpec,
    rng: &mut impl Rng,
) -> Result<EmbeddingSequence> {
    let dim = template.cols();
    let keyword = instance(template, spec, rng);
    let background = rng.random_range(background_len.0..=background_len.1);
    let before = rng.random_range(0..=background);
    let after = background - before;
    let mut data = gaussian_frames(before, dim, spec.background_sigma, rng);
    data.extend_from_slice(keyword.data());
    data.extend(gaussian_frames(after, dim, spec.background_sigma, rng));
    let total = before + keyword.rows() + after;
    EmbeddingSequence::new(Tensor::new(vec![total, dim], data)?)?
        .with_span(before, before + keyword.rows())
}

/// Generates the synthetic corpus; fully determined by `spec` (including its seed).
pub fn generate_corpus(spec: &SyntheticCorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, "corpus");
    let class_names = keyword_names(spec.classes, &mut rng);
    let dim = spec.dim;
    let mut templates = Vec::with_capacity(spec.classes);
    let mut clips = Vec::with_capacity(spec.classes);
    let mut utterances = Vec::with_capacity(spec.classes);
    for name in &class_names {
        let len = rng.random_range(spec.template_len.0..=spec.template_len.1);
        let tpl = template(len, dim, &mut rng);

        let class_clips = (0..spec.clips_per_class)
            .map(|_| embedded(&tpl, spec.clip_context, spec, &mut rng)?.with_label(name))
            .collect::<Result<Vec<_>>>()?;
        let class_utts = (0..spec.utterances_per_class)
            .map(|_| embedded(&tpl, spec.background_len, spec, &mut rng)?.with_label(name))
            .collect::<Result<Vec<_>>>()?;
        templates.push(EmbeddingSequence::new(tpl)?.with_label(name)?);
        clips.push(class_clips);
        utterances.push(class_utts);
    }
    Ok(Corpus {
        class_names,
        templates,
        clips,
        utterances,
    })
}

const MANIFEST: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "kind,class,index,path,frames,span";

/// Writes every template, clip and utterance as an EMB v1 file under `dir`
/// plus a `manifest.csv` listing them. Returns the number of files written
/// (excluding the manifest).
/// File stem of the `index`-th item of class `name`; also the utterance id
/// used by hypothesis files.
pub fn item_id(name: &str, index: usize) -> String {
    format!("{name}_{index:03}")
}

pub fn save_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<usize> {
    let dir = dir.as_ref();
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    let mut written = 0;
    let groups: [(&str, Vec<Vec<&EmbeddingSequence>>); 3] = [
        (
            "template",
            corpus.templates.iter().map(|t| vec![t]).collect(),
        ),
        (
            "clip",
            corpus.clips.iter().map(|c| c.iter().collect()).collect(),
        ),
        (
            "utterance",
            corpus
                .utterances
                .iter()
                .map(|c| c.iter().collect())
                .collect(),
        ),
    ];
    for (kind, per_class) in groups {
        let sub = dir.join(format!("{kind}s"));
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        for (c, items) in per_class.iter().enumerate() {
            let name = &corpus.class_names[c];
            for (i, seq) in items.iter().enumerate() {
                let rel = format!("{kind}s/{}.emb", item_id(name, i));
                save_embedding(seq, dir.join(&rel))?;
                let span = seq
                    .span
                    .map(|(s, e)| format!("{s}:{e}"))
                    .unwrap_or_default();
                let _ = writeln!(manifest, "{kind},{name},{i},{rel},{},{span}", seq.len());
                written += 1;
            }
        }
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(written)
}

/// Loads a corpus written by [`save_corpus`].
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let source = path.display().to_string();
    let err = |line: usize, msg: String| Error::Parse {
        path: source.clone(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == MANIFEST_HEADER => {}
        _ => return Err(err(1, format!("expected header `{MANIFEST_HEADER}`"))),
    }
    let mut corpus = Corpus {
        class_names: Vec::new(),
        templates: Vec::new(),
        clips: Vec::new(),
        utterances: Vec::new(),
    };
    let mut templates: Vec<Option<EmbeddingSequence>> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(err(
                lineno,
                format!("expected 6 columns, got {}", cols.len()),
            ));
        }
        let class = match corpus.class_index(cols[1]) {
            Some(c) => c,
            None => {
                corpus.class_names.push(cols[1].to_string());
                corpus.clips.push(Vec::new());
                corpus.utterances.push(Vec::new());
                templates.push(None);
                corpus.class_names.len() - 1
            }
        };
        let seq = load_embedding(dir.join(cols[3]))?;
        if seq.label.as_deref() != Some(cols[1]) {
            return Err(err(
                lineno,
                format!("{} is not labelled {}", cols[3], cols[1]),
            ));
        }
        match cols[0] {
            "template" => templates[class] = Some(seq),
            "clip" => corpus.clips[class].push(seq),
            "utterance" => corpus.utterances[class].push(seq),
            other => return Err(err(lineno, format!("unknown kind {other:?}"))),
        }
    }
    if corpus.class_names.is_empty() {
        return Err(Error::Insufficient(format!("{source} lists no classes")));
    }
    corpus.templates = templates
        .into_iter()
        .zip(&corpus.class_names)
        .map(|(t, n)| t.ok_or_else(|| Error::Insufficient(format!("class {n} has no template"))))
        .collect::<Result<_>>()?;
    Ok(corpus)
}

/// Mean over frames of per-frame cosine similarity between two equally long sequences.
pub fn mean_frame_cosine(a: &Tensor, b: &Tensor) -> f64 {
    let rows = a.rows().min(b.rows());
    let total: f64 = (0..rows)
        .map(|t| crate::autodiff::cosine_forward(a.row(t), b.row(t)).unwrap_or(0.0))
        .sum();
    total / rows as f64
}
