//! Property suites shared by the `properties` and `acceptance` test targets.
//!
//! Each suite drives a deterministic proptest runner over `CASES` random cases.
//! Sizes come from proptest strategies; bulk data comes from a seeded stream
//! so shrinking still acts on the interesting dimensions.

#![allow(dead_code)]

use std::collections::HashSet;

use kwspot::agents::{random_window, AgentKind, AgentParams, SupportSet};
use kwspot::autodiff::{contrastive_value, ModelParams, Tape};
use kwspot::embeddings::{
    generate_corpus, mean_frame_cosine, window_offsets, EmbeddingSequence, SyntheticCorpusSpec,
    WindowSpec,
};
use kwspot::encoder::EncoderParams;
use kwspot::eval::{f1_score, Tally};
use kwspot::rerank::{keyword_wer, rerank, word_error_rate, Hypothesis};
use kwspot::rng;
use kwspot::tensor::Tensor;
use kwspot::training::{rmsprop_update, PairStream, Parity, DEFAULT_EPS, DEFAULT_LR, DEFAULT_RHO};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::seq::SliceRandom;
use rand::Rng;

pub const CASES: u32 = 1000;

pub struct Suite {
    pub name: &'static str,
    pub run: fn() -> Result<(), String>,
}

fn check<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(config)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn fail(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

fn combine(a: &Tensor, b: &Tensor, alpha: f64, beta: f64) -> Tensor {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| alpha * x + beta * y)
        .collect();
    Tensor::new(a.shape().to_vec(), data).unwrap()
}

/// `f(x+y) - f(y) == f(x) - f(0)` and `f(a x) - f(0) == a (f(x) - f(0))`.
fn assert_affine(
    f: impl Fn(&Tensor) -> Tensor,
    x: &Tensor,
    y: &Tensor,
    alpha: f64,
) -> Result<(), TestCaseError> {
    let zero = Tensor::zeros(x.shape());
    let f0 = f(&zero);
    let fx = f(x);
    let lhs = combine(&f(&combine(x, y, 1.0, 1.0)), &f(y), 1.0, -1.0);
    let rhs = combine(&fx, &f0, 1.0, -1.0);
    prop_assert!(close(lhs.data(), rhs.data(), 1e-10), "additivity");
    let lhs = combine(&f(&combine(x, x, alpha, 0.0)), &f0, 1.0, -1.0);
    let rhs = combine(&fx, &f0, alpha, -alpha);
    prop_assert!(close(lhs.data(), rhs.data(), 1e-10), "homogeneity");
    Ok(())
}

pub fn conv_linearity() -> Result<(), String> {
    check(
        (
            1usize..12,
            1usize..5,
            1usize..5,
            1usize..4,
            -3.0f64..3.0,
            any::<u64>(),
        ),
        |(t, cin, cout, k, alpha, seed)| {
            let mut r = rng::stream(seed, "conv");
            let len = t + k - 1;
            let kernels = random_tensor(&[k, cin, cout], &mut r);
            let bias = random_tensor(&[cout], &mut r);
            let (x, y) = (
                random_tensor(&[len, cin], &mut r),
                random_tensor(&[len, cin], &mut r),
            );
            let f = |input: &Tensor| {
                let mut tape = Tape::new();
                let (i, kv, b) = (
                    tape.constant(input.clone()),
                    tape.constant(kernels.clone()),
                    tape.constant(bias.clone()),
                );
                let out = tape.conv1d(i, kv, b).unwrap();
                tape.value(out).unwrap().clone()
            };
            assert_affine(f, &x, &y, alpha)
        },
    )
}

pub fn dense_linearity() -> Result<(), String> {
    check(
        (1usize..16, 1usize..16, -3.0f64..3.0, any::<u64>()),
        |(n, m, alpha, seed)| {
            let mut r = rng::stream(seed, "dense");
            let weights = random_tensor(&[n, m], &mut r);
            let bias = random_tensor(&[m], &mut r);
            let (x, y) = (random_tensor(&[n], &mut r), random_tensor(&[n], &mut r));
            let f = |input: &Tensor| {
                let mut tape = Tape::new();
                let (i, w, b) = (
                    tape.constant(input.clone()),
                    tape.constant(weights.clone()),
                    tape.constant(bias.clone()),
                );
                let out = tape.dense(i, w, b).unwrap();
                tape.value(out).unwrap().clone()
            };
            assert_affine(f, &x, &y, alpha)
        },
    )
}

pub fn window_count_formula() -> Result<(), String> {
    check((1usize..300, 0usize..300, 1usize..60), |(t, w_raw, h)| {
        let w = 1 + w_raw % t;
        let offsets = window_offsets(t, w, h);
        prop_assert_eq!(offsets.len(), (t - w) / h + 1);
        for (i, &o) in offsets.iter().enumerate() {
            prop_assert_eq!(o, i * h);
            prop_assert!(o + w <= t);
        }
        // no further window would fit
        prop_assert!(offsets.last().unwrap() + h + w > t);
        Ok(())
    })
}

/// With `H <= W/2` and a span of at least `W` frames, some window has at least
/// `W - H + 1` (more than half) of its frames inside the span.
pub fn span_coverage() -> Result<(), String> {
    check(
        (
            2usize..40,
            0usize..40,
            0usize..100,
            0usize..100,
            0usize..100,
        ),
        |(w, h_raw, l_raw, pad, s_raw)| {
            let h = 1 + h_raw % (w / 2).max(1);
            let l = w + l_raw;
            let t = l + pad;
            let s = s_raw % (t - l + 1);
            let best = window_offsets(t, w, h)
                .into_iter()
                .map(|o| (o + w).min(s + l).saturating_sub(o.max(s)))
                .max()
                .unwrap();
            prop_assert!(
                best + h > w && 2 * best > w,
                "best overlap {best} for W={w} H={h}"
            );
            Ok(())
        },
    )
}

pub fn generator_separability() -> Result<(), String> {
    check((0.0f64..=0.2, any::<u64>()), |(sigma, seed)| {
        let corpus = generate_corpus(&SyntheticCorpusSpec {
            classes: 3,
            clips_per_class: 3,
            utterances_per_class: 1,
            template_len: (8, 12),
            background_len: (0, 0),
            sigma,
            seed,
            ..Default::default()
        })
        .map_err(fail)?;
        let (mut wins, mut total) = (0usize, 0usize);
        for c in 0..corpus.num_classes() {
            let tpl = corpus.templates[c].frames();
            for own in &corpus.clips[c] {
                let intra = mean_frame_cosine(tpl, &own.keyword_frames());
                for d in (0..corpus.num_classes()).filter(|&d| d != c) {
                    for other in &corpus.clips[d] {
                        wins += (intra > mean_frame_cosine(tpl, &other.keyword_frames())) as usize;
                        total += 1;
                    }
                }
            }
        }
        prop_assert!(
            wins as f64 >= 0.95 * total as f64,
            "{wins}/{total} at sigma {sigma}"
        );
        Ok(())
    })
}

pub fn encoder_range_and_pooling() -> Result<(), String> {
    check(
        (1usize..6, 8usize..24, any::<u64>()),
        |(dim, width, seed)| {
            let mut store = ModelParams::new();
            let mut r = rng::stream(seed, "encoder");
            let enc = EncoderParams::init(&mut store, "enc", dim, &mut r);
            let window = random_tensor(&[width, dim], &mut r);
            let v = enc.encode_vector(&store, &window).map_err(fail)?;
            let seq = enc.encode_sequence(&store, &window).map_err(fail)?;
            prop_assert!(v.data().iter().all(|x| x.abs() < 1.0));
            let maxima: Vec<f64> = (0..seq.cols())
                .map(|c| {
                    (0..seq.rows())
                        .map(|t| seq.row(t)[c])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            prop_assert_eq!(v.data(), maxima.as_slice());
            Ok(())
        },
    )
}

/// A random agent, support set and utterance for the agent suites.
pub struct Scene {
    pub agent: AgentParams,
    pub supports: SupportSet,
    pub utterance: EmbeddingSequence,
    pub windows: WindowSpec,
}

pub const SCENE_DIM: usize = 3;
pub const SCENE_WIDTH: usize = 8;

pub fn scene(
    kind: AgentKind,
    classes: usize,
    shots: usize,
    frames: usize,
    hop: usize,
    seed: u64,
) -> Scene {
    let mut r = rng::stream(seed, "scene");
    let agent = AgentParams::init(kind, SCENE_DIM, SCENE_WIDTH, seed).unwrap();
    let supports = SupportSet::new(
        (0..classes)
            .map(|c| {
                let windows = (0..shots)
                    .map(|_| random_window(SCENE_WIDTH, SCENE_DIM, &mut r))
                    .collect();
                (format!("class{c}"), windows)
            })
            .collect(),
    )
    .unwrap();
    let utterance = EmbeddingSequence::new(random_tensor(&[frames, SCENE_DIM], &mut r)).unwrap();
    Scene {
        agent,
        supports,
        utterance,
        windows: WindowSpec::new(SCENE_WIDTH, hop).unwrap(),
    }
}

fn kind_strategy(kinds: &'static [AgentKind]) -> impl Strategy<Value = AgentKind> {
    (0..kinds.len()).prop_map(move |i| kinds[i])
}

const MAX_KINDS: [AgentKind; 3] = [AgentKind::Siamese, AgentKind::Relation, AgentKind::Matching];

pub fn support_monotonicity() -> Result<(), String> {
    let s = (
        kind_strategy(&MAX_KINDS),
        1usize..4,
        1usize..4,
        8usize..24,
        1usize..5,
        any::<u64>(),
    );
    check(s, |(kind, classes, shots, frames, hop, seed)| {
        let sc = scene(kind, classes, shots, frames, hop, seed);
        let before = sc
            .agent
            .spot(&sc.utterance, &sc.supports, sc.windows, 0.5)
            .map_err(fail)?;
        let mut r = rng::stream(seed, "extra");
        let class = format!("class{}", r.random_range(0..classes));
        let grown = sc
            .supports
            .with_extra_support(&class, random_window(SCENE_WIDTH, SCENE_DIM, &mut r))
            .map_err(fail)?;
        let after = sc
            .agent
            .spot(&sc.utterance, &grown, sc.windows, 0.5)
            .map_err(fail)?;
        for (b, a) in before.class_scores.iter().zip(&after.class_scores) {
            prop_assert!(
                a.score >= b.score,
                "{kind}: {} fell from {} to {}",
                b.class,
                b.score,
                a.score
            );
        }
        Ok(())
    })
}

pub fn window_monotonicity() -> Result<(), String> {
    let s = (
        kind_strategy(&AgentKind::ALL),
        1usize..4,
        1usize..3,
        8usize..24,
        1usize..16,
        1usize..5,
        any::<u64>(),
    );
    check(s, |(kind, classes, shots, frames, extra, hop, seed)| {
        let sc = scene(kind, classes, shots, frames, hop, seed);
        let mut r = rng::stream(seed, "tail");
        let longer = sc
            .utterance
            .extended(&random_tensor(&[extra, SCENE_DIM], &mut r))
            .map_err(fail)?;
        let before = sc
            .agent
            .spot(&sc.utterance, &sc.supports, sc.windows, 0.5)
            .map_err(fail)?;
        let again = sc
            .agent
            .spot(&sc.utterance, &sc.supports, sc.windows, 0.5)
            .map_err(fail)?;
        prop_assert_eq!(&before, &again, "spotting is deterministic");
        let after = sc
            .agent
            .spot(&longer, &sc.supports, sc.windows, 0.5)
            .map_err(fail)?;
        for (b, a) in before.class_scores.iter().zip(&after.class_scores) {
            prop_assert!(
                a.score >= b.score,
                "{kind}: {} fell from {} to {}",
                b.class,
                b.score,
                a.score
            );
        }
        Ok(())
    })
}

pub fn threshold_monotonicity() -> Result<(), String> {
    let s = (
        kind_strategy(&AgentKind::ALL),
        1usize..5,
        1usize..3,
        8usize..24,
        1usize..5,
        -1.0f64..1.0,
        -1.0f64..1.0,
        any::<u64>(),
    );
    check(s, |(kind, classes, shots, frames, hop, a, b, seed)| {
        let (t1, t2) = (a.min(b), a.max(b));
        let sc = scene(kind, classes, shots, frames, hop, seed);
        let low = sc
            .agent
            .spot(&sc.utterance, &sc.supports, sc.windows, t1)
            .map_err(fail)?;
        let high = sc
            .agent
            .spot(&sc.utterance, &sc.supports, sc.windows, t2)
            .map_err(fail)?;
        for class in high.keywords.classes() {
            prop_assert!(
                low.keywords.contains(class),
                "{class} spotted at {t2} but not at {t1}"
            );
        }
        Ok(())
    })
}

pub fn score_ranges() -> Result<(), String> {
    let s = (
        kind_strategy(&AgentKind::ALL),
        1usize..4,
        8usize..24,
        any::<u64>(),
    );
    check(s, |(kind, shots, frames, seed)| {
        let sc = scene(kind, 1, shots, frames, 4, seed);
        let result = sc
            .agent
            .spot(&sc.utterance, &sc.supports, sc.windows, 0.5)
            .map_err(fail)?;
        for row in &result.trace {
            let ok = match kind {
                AgentKind::Siamese | AgentKind::Proto => (-1.0..=1.0).contains(&row.score),
                _ => row.score > 0.0 && row.score < 1.0,
            };
            prop_assert!(ok, "{kind} score {}", row.score);
        }
        Ok(())
    })
}

pub fn proto_equals_siamese_at_one_shot() -> Result<(), String> {
    check((8usize..24, any::<u64>()), |(width, seed)| {
        let mut r = rng::stream(seed, "k1");
        let siamese = AgentParams::init(AgentKind::Siamese, 4, width, seed).map_err(fail)?;
        let mut proto = siamese.clone();
        proto.kind = AgentKind::Proto;
        let q = random_window(width, 4, &mut r);
        let s = [random_window(width, 4, &mut r)];
        let a = siamese.score_siamese(&q, &s).map_err(fail)?.score;
        let b = proto.score_proto(&q, &s).map_err(fail)?.score;
        prop_assert_eq!(a.to_bits(), b.to_bits());
        Ok(())
    })
}

pub fn contrastive_non_negative() -> Result<(), String> {
    let s = (
        prop::collection::vec(-5.0f64..5.0, 1..20),
        any::<bool>(),
        0.01f64..10.0,
        any::<u64>(),
    );
    check(s, |(a, same, margin, seed)| {
        let mut r = rng::stream(seed, "contrastive");
        let b: Vec<f64> = a.iter().map(|x| x + r.random_range(-2.0..2.0)).collect();
        prop_assert!(contrastive_value(&a, &b, same, margin) >= 0.0);
        prop_assert_eq!(contrastive_value(&a, &a, true, margin), 0.0);
        Ok(())
    })
}

pub fn rmsprop_constant_gradient_limit() -> Result<(), String> {
    let s = (1e-3f64..1e3, any::<bool>(), -10.0f64..10.0);
    check(s, |(magnitude, negative, start)| {
        let g = if negative { -magnitude } else { magnitude };
        let (mut p, mut v) = (vec![start], vec![0.0]);
        let mut step = 0.0;
        for _ in 0..100 {
            let before = p[0];
            rmsprop_update(&mut p, &[g], &mut v, DEFAULT_LR, DEFAULT_RHO, DEFAULT_EPS);
            step = (p[0] - before).abs();
        }
        prop_assert!(
            (step - DEFAULT_LR).abs() <= 0.01 * DEFAULT_LR,
            "step {step} for g {g}"
        );
        prop_assert!(v[0] >= 0.0);
        Ok(())
    })
}

pub fn rmsprop_is_elementwise() -> Result<(), String> {
    check((1usize..24, any::<u64>()), |(n, seed)| {
        let mut r = rng::stream(seed, "perm");
        let mut draw =
            |lo: f64, hi: f64| (0..n).map(|_| r.random_range(lo..hi)).collect::<Vec<f64>>();
        let (p, g, v) = (draw(-2.0, 2.0), draw(-3.0, 3.0), draw(0.0, 1.0));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng::stream(seed, "shuffle"));
        let apply = |x: &[f64]| perm.iter().map(|&i| x[i]).collect::<Vec<f64>>();
        let (mut p1, mut v1) = (p.clone(), v.clone());
        rmsprop_update(&mut p1, &g, &mut v1, DEFAULT_LR, DEFAULT_RHO, DEFAULT_EPS);
        let (mut p2, mut v2) = (apply(&p), apply(&v));
        rmsprop_update(
            &mut p2,
            &apply(&g),
            &mut v2,
            DEFAULT_LR,
            DEFAULT_RHO,
            DEFAULT_EPS,
        );
        prop_assert_eq!(apply(&p1), p2);
        prop_assert_eq!(apply(&v1), v2);
        Ok(())
    })
}

pub fn pair_alternation() -> Result<(), String> {
    let corpus = generate_corpus(&SyntheticCorpusSpec {
        classes: 3,
        clips_per_class: 2,
        utterances_per_class: 1,
        dim: 2,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    check((1usize..40, any::<u64>()), |(len, seed)| {
        let mut stream = PairStream::new(&corpus, 8, rng::stream(seed, "pairs"));
        let (mut pos, mut neg) = (0i64, 0i64);
        for i in 0..len {
            let pair = stream.next_pair().map_err(fail)?;
            let expected = if i % 2 == 0 {
                Parity::Positive
            } else {
                Parity::Negative
            };
            prop_assert_eq!(pair.same, expected == Parity::Positive);
            prop_assert_eq!(pair.same, pair.classes.0 == pair.classes.1);
            if pair.same {
                pos += 1
            } else {
                neg += 1
            }
            prop_assert!((pos - neg).abs() <= 1);
        }
        Ok(())
    })
}

pub fn f1_identities() -> Result<(), String> {
    check((0usize..60, 0usize..60, 0usize..60), |(tp, fp, fn_)| {
        let t = Tally { tp, fp, fn_ };
        let f1 = t.f1();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert_eq!(f1 == 0.0, tp == 0);
        prop_assert_eq!(f1 == 1.0, tp > 0 && fp == 0 && fn_ == 0);
        if tp > 0 {
            let direct = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
            prop_assert!((f1 - direct).abs() < 1e-12);
            prop_assert!((f1 - f1_score(t.precision(), t.recall())).abs() < 1e-12);
        }
        Ok(())
    })
}

const VOCAB: [&str; 6] = ["noirtier", "morrel", "the", "bed", "was", "danglars"];

fn hypotheses_strategy() -> impl Strategy<Value = Vec<Hypothesis>> {
    prop::collection::vec(prop::collection::vec(0..VOCAB.len(), 0..6), 1..7).prop_map(|hyps| {
        hyps.into_iter()
            .enumerate()
            .map(|(rank, toks)| Hypothesis {
                rank,
                tokens: toks.into_iter().map(|i| VOCAB[i].to_string()).collect(),
            })
            .collect()
    })
}

fn spotted_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0..VOCAB.len() + 2, 0..4).prop_map(|ids| {
        ids.into_iter()
            .map(|i| {
                VOCAB
                    .get(i)
                    .map_or_else(|| format!("absent{i}"), |w| w.to_uppercase())
            })
            .collect()
    })
}

fn hits(h: &Hypothesis, spotted: &[String]) -> usize {
    let distinct: HashSet<String> = spotted.iter().map(|s| s.to_lowercase()).collect();
    distinct.iter().filter(|k| h.contains(k)).count()
}

pub fn rerank_permutation_stability_idempotence() -> Result<(), String> {
    check(
        (hypotheses_strategy(), spotted_strategy()),
        |(hyps, spotted)| {
            let result = rerank(&hyps, &spotted).map_err(fail)?;
            let mut a: Vec<usize> = result.order.iter().map(|h| h.rank).collect();
            a.sort_unstable();
            prop_assert_eq!(a, (0..hyps.len()).collect::<Vec<_>>(), "permutation");
            for (h, original) in result
                .order
                .iter()
                .zip(result.order.iter().map(|h| &hyps[h.rank]))
            {
                prop_assert_eq!(h, original, "hypotheses are moved, never edited");
            }
            for w in result.order.windows(2) {
                let (x, y) = (hits(&w[0], &spotted), hits(&w[1], &spotted));
                prop_assert!(x >= y, "descending keyword count");
                if x == y {
                    prop_assert!(w[0].rank < w[1].rank, "stable among equal counts");
                }
            }
            let again = rerank(&result.order, &spotted).map_err(fail)?;
            prop_assert_eq!(&again, &result, "idempotent");
            Ok(())
        },
    )
}

pub fn rerank_filter_symmetry() -> Result<(), String> {
    check(
        (hypotheses_strategy(), spotted_strategy()),
        |(hyps, spotted)| {
            let base = rerank(&hyps, &spotted).map_err(fail)?;
            let mut padded = spotted.clone();
            padded.push("nowhere".into());
            let with_absent = rerank(&hyps, &padded).map_err(fail)?;
            prop_assert_eq!(
                &with_absent.order,
                &base.order,
                "absent keywords change nothing"
            );
            let lowered: HashSet<String> = spotted.iter().map(|s| s.to_lowercase()).collect();
            let masked: Vec<Hypothesis> = hyps
                .iter()
                .map(|h| Hypothesis {
                    rank: h.rank,
                    tokens: h
                        .tokens
                        .iter()
                        .map(|t| {
                            if lowered.contains(t) {
                                t.clone()
                            } else {
                                "_".into()
                            }
                        })
                        .collect(),
                })
                .collect();
            let masked_ranks: Vec<usize> = rerank(&masked, &spotted)
                .map_err(fail)?
                .order
                .iter()
                .map(|h| h.rank)
                .collect();
            let ranks: Vec<usize> = base.order.iter().map(|h| h.rank).collect();
            prop_assert_eq!(masked_ranks, ranks, "unspotted words never influence order");
            Ok(())
        },
    )
}

pub fn keyword_wer_is_wer_on_all_keyword_text() -> Result<(), String> {
    let words = || prop::collection::vec(0..4usize, 0..9);
    check((words(), words()), |(hyp, reference)| {
        prop_assume!(!reference.is_empty());
        let names = ["a", "b", "c", "d"];
        let to = |v: &[usize]| v.iter().map(|&i| names[i].to_string()).collect::<Vec<_>>();
        let (hyp, reference) = (to(&hyp), to(&reference));
        let kw = keyword_wer(&hyp, &reference, &names).map_err(fail)?;
        let wer = word_error_rate(&hyp, &reference).map_err(fail)?;
        prop_assert_eq!(kw, wer);
        Ok(())
    })
}

pub fn all() -> Vec<Suite> {
    macro_rules! suites {
        ($($f:ident),* $(,)?) => { vec![$(Suite { name: stringify!($f), run: $f }),*] };
    }
    suites![
        conv_linearity,
        dense_linearity,
        window_count_formula,
        span_coverage,
        generator_separability,
        encoder_range_and_pooling,
        support_monotonicity,
        window_monotonicity,
        threshold_monotonicity,
        score_ranges,
        proto_equals_siamese_at_one_shot,
        contrastive_non_negative,
        rmsprop_constant_gradient_limit,
        rmsprop_is_elementwise,
        pair_alternation,
        f1_identities,
        rerank_permutation_stability_idempotence,
        rerank_filter_symmetry,
        keyword_wer_is_wer_on_all_keyword_text,
    ]
}
