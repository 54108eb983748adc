//! Frequency-discounted cosine similarity for contextualised word embeddings.
//!
//! Cosine similarity between contextual embeddings of the same word tends to
//! fall as the word gets more frequent. The discount here divides the cosine
//! by a per-word factor `alpha = 1 + m * (b - ln freq)`, with `(m, b)` chosen
//! by whether the word is a stop word, so that frequent words are not judged
//! less similar merely for being frequent.
//!
//! Modules, roughly in pipeline order:
//!
//! - [`freqstats`]: corpus counting, frequency tables, stop words.
//! - [`embedding_store`]: instance embeddings, sibling means, norm/frequency points.
//! - [`simcore`]: cosine, discount factor, discounted score, judge.
//! - [`calibrate`]: fitting the five parameters on labelled pairs.
//! - [`stats`]: Pearson, least squares, equal-count binning.
//! - [`evalharness`]: metrics, bin analysis and scatter fits.
//! - [`synth`]: seeded synthetic data with planted structure.

pub mod calibrate;
pub mod cli;
pub mod embedding_store;
pub mod evalharness;
pub mod freqstats;
pub mod plot;
pub mod simcore;
pub mod stats;
pub mod synth;

pub use calibrate::{fit, fit_averaged, LabeledPair, SearchBox};
pub use evalharness::{evaluate, EvalReport, Mode};
pub use freqstats::{FrequencyTable, StopWordList};
pub use simcore::{alpha, cosine, discount_score, discounted_cosine, judge, DiscountParams, Label};
