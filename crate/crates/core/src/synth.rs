//! Seeded synthetic data with planted discount structure.
//!
//! Pairs are built so that, under the planted parameters, every `Same` pair
//! scores at least `theta + margin/2` and every `Different` pair at most
//! `theta - margin/2`. Plain cosine sees the same pairs shrunk by `alpha^2`,
//! so frequent words look less similar than they are.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::calibrate::LabeledPair;
use crate::embedding_store::InstanceEmbedding;
use crate::simcore::{alpha, DiscountParams, Label};

/// A word with an integer corpus count and stop-word class.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
    pub stop: bool,
}

impl VocabEntry {
    pub fn log_freq(&self) -> f64 {
        (self.count as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub n_pairs: usize,
    pub dim: usize,
    pub margin: f64,
    pub planted: DiscountParams,
    pub n_content_words: usize,
    /// Log-frequency range of content words.
    pub content_log_freq: (f64, f64),
    /// Stop words used, taken from the front of [`STOP_WORDS`].
    pub n_stop_words: usize,
    pub stop_log_freq: (f64, f64),
    /// Fraction of pairs whose word is a stop word.
    pub stop_share: f64,
}

pub const STOP_WORDS: [&str; 12] = [
    "the", "of", "and", "to", "in", "a", "is", "that", "for", "it", "with", "as",
];

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_pairs: 400,
            dim: 16,
            margin: 0.2,
            planted: DiscountParams {
                theta: 0.5,
                m_s: 0.04,
                b_s: 5.0,
                m_n: 0.08,
                b_n: 2.5,
            },
            n_content_words: 40,
            content_log_freq: (0.0, 9.0),
            n_stop_words: 8,
            stop_log_freq: (4.0, 9.0),
            stop_share: 0.25,
        }
    }
}

/// Words with log-uniform counts; content words are `lexNN`. Each class's
/// log-frequency range is split into equal strata with one word drawn per
/// stratum, so every seed covers the whole range.
pub fn vocabulary(cfg: &PlantedConfig, seed: u64) -> Vec<VocabEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x76_6f63_6162);
    let mut out = Vec::with_capacity(cfg.n_content_words + cfg.n_stop_words);
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), i: usize, n: usize| -> u64 {
        let width = (hi - lo) / n as f64;
        let lf = lo + width * (i as f64 + rng.gen::<f64>());
        (lf.exp().round() as u64).max(1)
    };
    for (i, w) in STOP_WORDS.iter().take(cfg.n_stop_words).enumerate() {
        out.push(VocabEntry {
            word: (*w).to_owned(),
            count: draw(&mut rng, cfg.stop_log_freq, i, cfg.n_stop_words),
            stop: true,
        });
    }
    for i in 0..cfg.n_content_words {
        out.push(VocabEntry {
            word: format!("lex{i:02}"),
            count: draw(&mut rng, cfg.content_log_freq, i, cfg.n_content_words),
            stop: false,
        });
    }
    out
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Two vectors with cosine `c`, each given a random norm in `[2, 20)`.
pub fn vectors_with_cosine(rng: &mut ChaCha8Rng, dim: usize, c: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(dim >= 2 && (-1.0..=1.0).contains(&c));
    let x = unit(&gaussian(rng, dim));
    let mut z = gaussian(rng, dim);
    let proj: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
    z.iter_mut().zip(&x).for_each(|(zi, xi)| *zi -= proj * xi);
    let z = unit(&z);
    let s = (1.0 - c * c).sqrt();
    let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| c * a + s * b).collect();
    let nx = rng.gen_range(2.0..20.0);
    let ny = rng.gen_range(2.0..20.0);
    (
        x.iter().map(|v| v * nx).collect(),
        y.iter().map(|v| v * ny).collect(),
    )
}

/// Labelled pairs over [`vocabulary`] following the planted structure.
pub fn planted_pairs_for(cfg: &PlantedConfig, vocab: &[VocabEntry], seed: u64) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stops: Vec<&VocabEntry> = vocab.iter().filter(|v| v.stop).collect();
    let content: Vec<&VocabEntry> = vocab.iter().filter(|v| !v.stop).collect();
    let half = cfg.margin / 2.0;
    let theta = cfg.planted.theta;
    (0..cfg.n_pairs)
        .map(|i| {
            let pool = if !stops.is_empty() && (content.is_empty() || rng.gen_bool(cfg.stop_share))
            {
                &stops
            } else {
                &content
            };
            let entry = pool[rng.gen_range(0..pool.len())];
            let lf = entry.log_freq();
            let a = alpha(&cfg.planted, lf, entry.stop);
            let gold = if i % 2 == 0 {
                Label::Same
            } else {
                Label::Different
            };
            // Discounted score target, then the plain cosine that produces it.
            let target = match gold {
                Label::Same => {
                    let hi = (theta + half + 0.2).min(0.99 / (a * a));
                    let lo = theta + half;
                    assert!(
                        hi >= lo,
                        "planted structure cannot fit a Same pair at log-freq {lf}"
                    );
                    rng.gen_range(lo..=hi)
                }
                Label::Different => rng.gen_range((theta - half - 0.2)..=(theta - half)),
            };
            let c = (target * a * a).clamp(-1.0, 1.0);
            let (vector1, vector2) = vectors_with_cosine(&mut rng, cfg.dim, c);
            LabeledPair {
                word: entry.word.clone(),
                pos: if entry.stop { "X".into() } else { "N".into() },
                vector1,
                vector2,
                gold,
                log_freq: lf,
                stop: entry.stop,
                freq_missing: false,
            }
        })
        .collect()
}

pub fn planted_pairs(cfg: &PlantedConfig, seed: u64) -> Vec<LabeledPair> {
    let vocab = vocabulary(cfg, seed);
    planted_pairs_for(cfg, &vocab, seed)
}

/// Whitespace-separated corpus in which each vocabulary word occurs exactly
/// `count` times, shuffled and wrapped at `per_line` tokens.
pub fn corpus(vocab: &[VocabEntry], seed: u64, per_line: usize) -> String {
    use rand::seq::SliceRandom;
    let mut tokens: Vec<&str> = vocab
        .iter()
        .flat_map(|v| std::iter::repeat_n(v.word.as_str(), v.count as usize))
        .collect();
    tokens.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = String::new();
    for line in tokens.chunks(per_line.max(1)) {
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Instance embeddings whose per-word mean has norm
/// `intercept + slope * ln(count)`, with `(slope, intercept)` chosen by class.
pub fn planted_instances(
    vocab: &[VocabEntry],
    per_word: usize,
    dim: usize,
    stop_line: (f64, f64),
    content_line: (f64, f64),
    seed: u64,
) -> Vec<InstanceEmbedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(vocab.len() * per_word);
    for entry in vocab {
        let (slope, intercept) = if entry.stop { stop_line } else { content_line };
        let target = intercept + slope * entry.log_freq();
        let members: Vec<Vec<f64>> = (0..per_word)
            .map(|_| {
                gaussian(&mut rng, dim)
                    .into_iter()
                    .map(|x| x + 1.0)
                    .collect()
            })
            .collect();
        let mut mean = vec![0.0; dim];
        for m in &members {
            mean.iter_mut().zip(m).for_each(|(a, b)| *a += b);
        }
        let norm = (mean.iter().map(|x| x * x).sum::<f64>()).sqrt() / per_word as f64;
        let scale = target / norm;
        for (k, m) in members.into_iter().enumerate() {
            out.push(InstanceEmbedding {
                word: entry.word.clone(),
                instance_id: format!("{}-{k}", entry.word),
                vector: m.into_iter().map(|x| x * scale).collect(),
            });
        }
    }
    out
}
