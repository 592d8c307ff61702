//! Pairwise training: alternating positive/negative pairs, contrastive loss for
//! the cosine agents, cross-entropy on the pair score for the learned-similarity
//! agents, and RMSProp updates.

use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::agents::{AgentKind, AgentParams};
use crate::autodiff::{ModelParams, Tape, Var};
use crate::checkpoint::save_checkpoint;
use crate::embeddings::{clip_window, Corpus};
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_RHO: f64 = 0.9;
pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_MARGIN: f64 = 5.0;
pub const DEFAULT_STEPS: u64 = 800_000;

/// RMSProp state: one second-moment accumulator per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    accumulators: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(params: &ModelParams, lr: f64, rho: f64) -> Self {
        OptimizerState {
            lr,
            rho,
            eps: DEFAULT_EPS,
            accumulators: params
                .ids()
                .map(|id| vec![0.0; params.value(id).numel()])
                .collect(),
        }
    }

    pub fn accumulator(&self, index: usize) -> &[f64] {
        &self.accumulators[index]
    }
}

/// Elementwise RMSProp update of `params` given `grads`, in place.
pub fn rmsprop_update(
    params: &mut [f64],
    grads: &[f64],
    accum: &mut [f64],
    lr: f64,
    rho: f64,
    eps: f64,
) {
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(accum.iter_mut()) {
        *v = rho * *v + (1.0 - rho) * g * g;
        *p -= lr * g / (v.sqrt() + eps);
    }
}

/// Applies one RMSProp step from the gradients stored in `params`.
/// A non-finite gradient aborts the step before any parameter changes.
pub fn rmsprop_step(params: &mut ModelParams, state: &mut OptimizerState, step: u64) -> Result<()> {
    if state.accumulators.len() != params.len() {
        return Err(Error::shape(
            "rmsprop",
            format!(
                "{} accumulators for {} parameters",
                state.accumulators.len(),
                params.len()
            ),
        ));
    }
    for id in params.ids() {
        if !params.grad(id).is_finite() {
            return Err(Error::NonFiniteGradient {
                step,
                param: params.name(id).to_string(),
            });
        }
    }
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let (value, grad) = params.value_and_grad_mut(id);
        rmsprop_update(
            value.data_mut(),
            grad.data(),
            &mut state.accumulators[id.0],
            state.lr,
            state.rho,
            state.eps,
        );
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Positive,
    Negative,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Positive => Parity::Negative,
            Parity::Negative => Parity::Positive,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainPair {
    pub a: Tensor,
    pub b: Tensor,
    /// True when both windows come from the same keyword class.
    pub same: bool,
    pub classes: (usize, usize),
}

/// Draws one pair of clip windows: two clips of one class for a positive, clips
/// of two distinct classes for a negative.
pub fn sample_pair(
    corpus: &Corpus,
    width: usize,
    rng: &mut impl Rng,
    parity: Parity,
) -> Result<TrainPair> {
    let (ca, ia, cb, ib) = match parity {
        Parity::Positive => {
            let eligible: Vec<usize> = (0..corpus.num_classes())
                .filter(|&c| corpus.clips[c].len() >= 2)
                .collect();
            let &c = eligible.choose(rng).ok_or_else(|| {
                Error::Insufficient("positive pairs need a class with at least 2 clips".into())
            })?;
            let n = corpus.clips[c].len();
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (c, i, c, j)
        }
        Parity::Negative => {
            let eligible: Vec<usize> = (0..corpus.num_classes())
                .filter(|&c| !corpus.clips[c].is_empty())
                .collect();
            if eligible.len() < 2 {
                return Err(Error::Insufficient(
                    "negative pairs need at least 2 classes with clips".into(),
                ));
            }
            let x = rng.random_range(0..eligible.len());
            let mut y = rng.random_range(0..eligible.len() - 1);
            if y >= x {
                y += 1;
            }
            let (ca, cb) = (eligible[x], eligible[y]);
            (
                ca,
                rng.random_range(0..corpus.clips[ca].len()),
                cb,
                rng.random_range(0..corpus.clips[cb].len()),
            )
        }
    };
    Ok(TrainPair {
        a: clip_window(&corpus.clips[ca][ia], width),
        b: clip_window(&corpus.clips[cb][ib], width),
        same: ca == cb,
        classes: (ca, cb),
    })
}

/// Strictly alternating pair stream starting with a positive pair.
pub struct PairStream<'a> {
    corpus: &'a Corpus,
    width: usize,
    rng: rng::StreamRng,
    next: Parity,
}

impl<'a> PairStream<'a> {
    pub fn new(corpus: &'a Corpus, width: usize, rng: rng::StreamRng) -> Self {
        PairStream {
            corpus,
            width,
            rng,
            next: Parity::Positive,
        }
    }

    pub fn next_pair(&mut self) -> Result<TrainPair> {
        let pair = sample_pair(self.corpus, self.width, &mut self.rng, self.next)?;
        self.next = self.next.flip();
        Ok(pair)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub steps: u64,
    pub seed: u64,
    pub margin: f64,
    pub lr: f64,
    pub rho: f64,
    /// Write a checkpoint every this many steps (0 disables).
    pub checkpoint_interval: u64,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: DEFAULT_STEPS,
            seed: 0,
            margin: DEFAULT_MARGIN,
            lr: DEFAULT_LR,
            rho: DEFAULT_RHO,
            checkpoint_interval: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::Config(format!(
                "margin must be > 0, got {}",
                self.margin
            )));
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config("lr must be > 0 and rho in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Records the training loss of `agent` on one pair.
pub fn loss_var(
    agent: &AgentParams,
    tape: &mut Tape,
    pair: &TrainPair,
    margin: f64,
) -> Result<Var> {
    let a = tape.constant(pair.a.clone());
    let b = tape.constant(pair.b.clone());
    if agent.kind.has_learned_similarity() {
        let score = agent.pair_score_var(tape, a, b)?;
        tape.bce(score, pair.same)
    } else {
        let ea = agent.encoder.encode_vector_var(tape, &agent.store, a)?;
        let eb = agent.encoder.encode_vector_var(tape, &agent.store, b)?;
        tape.contrastive(ea, eb, pair.same, margin)
    }
}

/// Training loss of `agent` on one pair (forward only).
pub fn pair_loss(agent: &AgentParams, pair: &TrainPair, margin: f64) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = loss_var(agent, &mut tape, pair, margin)?;
    Ok(tape.value(loss)?.item())
}

/// Forward + backward on one pair; gradients land in `agent.store` (zeroed first).
pub fn pair_gradients(agent: &mut AgentParams, pair: &TrainPair, margin: f64) -> Result<f64> {
    agent.store.zero_grads();
    let mut tape = Tape::new();
    let loss = loss_var(agent, &mut tape, pair, margin)?;
    let value = tape.value(loss)?.item();
    tape.backward(loss, &mut agent.store)?;
    Ok(value)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: AgentParams,
    /// Loss of every step, in order.
    pub losses: Vec<f64>,
}

/// Trains a fresh agent of `kind` for `config.steps` steps.
pub fn train(
    kind: AgentKind,
    corpus: &Corpus,
    window: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let params = AgentParams::init(kind, corpus.dim(), window, config.seed)?;
    train_from(params, corpus, config)
}

/// Continues training `params` for `config.steps` further steps.
pub fn train_from(
    mut params: AgentParams,
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.dim() != params.dim() {
        return Err(Error::shape(
            "train",
            format!("corpus dim {} vs agent dim {}", corpus.dim(), params.dim()),
        ));
    }
    let start = params.steps;
    let mut pairs = PairStream::new(
        corpus,
        params.window,
        rng::stream(config.seed, &format!("pairs@{start}")),
    );
    let mut state = OptimizerState::new(&params.store, config.lr, config.rho);
    let mut losses = Vec::with_capacity(config.steps as usize);
    for _ in 0..config.steps {
        let pair = pairs.next_pair()?;
        let loss = pair_gradients(&mut params, &pair, config.margin)?;
        let step = params.steps + 1;
        rmsprop_step(&mut params.store, &mut state, step)?;
        params.steps = step;
        losses.push(loss);
        if let Some(dir) = &config.checkpoint_dir {
            if config.checkpoint_interval > 0 && step.is_multiple_of(config.checkpoint_interval) {
                save_checkpoint(&params, dir.join(format!("checkpoint_{step:08}.msp")))?;
            }
        }
    }
    params.store.zero_grads();
    Ok(TrainOutcome { params, losses })
}

/// Renders a loss history as CSV `step,loss` with 1-based steps starting after `first_step`.
pub fn loss_csv(losses: &[f64], first_step: u64) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!(
            "{},{}\n",
            first_step + i as u64 + 1,
            crate::embeddings::format_real(*l)
        ));
    }
    out
}
