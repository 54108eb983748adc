//! Fitting discount parameters to labelled context pairs.
//!
//! The objective is plain training accuracy: a pair is judged `Same` when its
//! discounted cosine reaches `theta`. It is piecewise constant in the
//! parameters, so [`fit`] uses the derivative-free [`search::BoxMaximizer`].

pub mod search;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::simcore::{alpha, cosine, discount_score, judge, DiscountParams, Label, SimError};
use search::BoxMaximizer;

pub const DEFAULT_BUDGET: usize = 500;
pub const DEFAULT_REPEATS: usize = 5;

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("no labelled pairs")]
    EmptyPairs,
    #[error("evaluation budget must be at least 1")]
    ZeroBudget,
    #[error("repeat count must be at least 1")]
    ZeroRepeats,
    #[error("invalid search box: {0}")]
    InvalidBox(String),
    #[error("pair {index} ({word:?}): {source}")]
    InvalidPair {
        index: usize,
        word: String,
        #[source]
        source: SimError,
    },
}

/// A word seen in two contexts, with a gold same/different-meaning label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledPair {
    pub word: String,
    pub pos: String,
    pub vector1: Vec<f64>,
    pub vector2: Vec<f64>,
    pub gold: Label,
    pub log_freq: f64,
    pub stop: bool,
    /// The word was absent from the frequency table (so `log_freq` is 0).
    pub freq_missing: bool,
}

/// Pairs reduced to what scoring needs: the plain cosine is computed once and
/// every parameter setting only rescales it.
#[derive(Debug, Clone)]
pub struct PreparedPairs {
    cosines: Vec<f64>,
    log_freqs: Vec<f64>,
    stops: Vec<bool>,
    gold: Vec<Label>,
}

impl PreparedPairs {
    pub fn new(pairs: &[LabeledPair]) -> Result<Self, CalibrateError> {
        if pairs.is_empty() {
            return Err(CalibrateError::EmptyPairs);
        }
        let cosines = pairs
            .iter()
            .enumerate()
            .map(|(index, p)| {
                cosine(&p.vector1, &p.vector2).map_err(|source| CalibrateError::InvalidPair {
                    index,
                    word: p.word.clone(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            cosines,
            log_freqs: pairs.iter().map(|p| p.log_freq).collect(),
            stops: pairs.iter().map(|p| p.stop).collect(),
            gold: pairs.iter().map(|p| p.gold).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.cosines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cosines.is_empty()
    }

    pub fn plain_score(&self, i: usize) -> f64 {
        self.cosines[i]
    }

    /// Discounted cosine of pair `i`; both contexts share the word's discount.
    pub fn score(&self, i: usize, params: &DiscountParams) -> f64 {
        let a = alpha(params, self.log_freqs[i], self.stops[i]);
        discount_score(self.cosines[i], a, a)
    }

    pub fn gold(&self, i: usize) -> Label {
        self.gold[i]
    }

    pub fn log_freq(&self, i: usize) -> f64 {
        self.log_freqs[i]
    }

    pub fn accuracy(&self, params: &DiscountParams) -> f64 {
        let correct = (0..self.len())
            .filter(|&i| judge(self.score(i, params), params.theta) == self.gold[i])
            .count();
        correct as f64 / self.len() as f64
    }
}

/// Fraction of pairs whose thresholded discounted cosine matches the gold label.
pub fn objective(params: &DiscountParams, pairs: &[LabeledPair]) -> Result<f64, CalibrateError> {
    Ok(PreparedPairs::new(pairs)?.accuracy(params))
}

/// Closed search interval for each parameter, in `[theta, m_s, b_s, m_n, b_n]` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBox {
    pub lower: [f64; 5],
    pub upper: [f64; 5],
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            lower: [0.0, 0.0, 0.0, 0.0, 0.0],
            upper: [1.0, 1.0, 10.0, 1.0, 10.0],
        }
    }
}

impl SearchBox {
    pub fn validate(&self) -> Result<(), CalibrateError> {
        for (j, name) in DiscountParams::NAMES.iter().enumerate() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(CalibrateError::InvalidBox(format!(
                    "{name} interval [{lo}, {hi}]"
                )));
            }
        }
        if self.lower[0] < 0.0 || self.upper[0] > 1.0 {
            return Err(CalibrateError::InvalidBox(
                "theta must lie in [0, 1]".into(),
            ));
        }
        if self.lower[1] < 0.0 || self.lower[3] < 0.0 {
            return Err(CalibrateError::InvalidBox(
                "slopes must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, p: &DiscountParams) -> bool {
        p.to_array()
            .iter()
            .enumerate()
            .all(|(j, v)| *v >= self.lower[j] && *v <= self.upper[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRun {
    pub seed: u64,
    pub params: DiscountParams,
    pub train_accuracy: f64,
}

fn check_fit_args(box_: &SearchBox, budget: usize) -> Result<(), CalibrateError> {
    if budget == 0 {
        return Err(CalibrateError::ZeroBudget);
    }
    box_.validate()
}

/// Maps the optimizer's unit cube onto the box. Slopes use a quadratic
/// scale: alpha stays positive over a log-frequency span `L` only while
/// `m < 1 / L`, so useful slopes crowd towards zero and get most samples.
fn to_params(box_: &SearchBox, u: &[f64]) -> DiscountParams {
    let mut a = [0.0; 5];
    for j in 0..5 {
        let w = if j == 1 || j == 3 { u[j] * u[j] } else { u[j] };
        a[j] = box_.lower[j] + w * (box_.upper[j] - box_.lower[j]);
    }
    DiscountParams::from_array(a)
}

fn fit_prepared(prepared: &PreparedPairs, box_: &SearchBox, seed: u64, budget: usize) -> FitRun {
    let mut opt = BoxMaximizer::new(vec![0.0; 5], vec![1.0; 5], seed);
    for _ in 0..budget {
        let x = opt.ask();
        opt.tell(prepared.accuracy(&to_params(box_, &x)));
    }
    let (x, acc) = opt.best().expect("budget is at least one");
    FitRun {
        seed,
        params: to_params(box_, x),
        train_accuracy: acc,
    }
}

/// Best parameters found within `budget` objective evaluations.
pub fn fit(
    pairs: &[LabeledPair],
    box_: &SearchBox,
    seed: u64,
    budget: usize,
) -> Result<FitRun, CalibrateError> {
    check_fit_args(box_, budget)?;
    let prepared = PreparedPairs::new(pairs)?;
    Ok(fit_prepared(&prepared, box_, seed, budget))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedFit {
    pub params: DiscountParams,
    /// Accuracy of the averaged parameters.
    pub train_accuracy: f64,
    pub per_run: Vec<FitRun>,
}

/// Runs [`fit`] with seeds `base_seed, base_seed + 1, ..` and averages each
/// parameter, threshold included, across the runs.
pub fn fit_averaged(
    pairs: &[LabeledPair],
    box_: &SearchBox,
    base_seed: u64,
    budget: usize,
    repeats: usize,
) -> Result<AveragedFit, CalibrateError> {
    check_fit_args(box_, budget)?;
    if repeats == 0 {
        return Err(CalibrateError::ZeroRepeats);
    }
    let prepared = PreparedPairs::new(pairs)?;
    let per_run: Vec<FitRun> = (0..repeats as u64)
        .into_par_iter()
        .map(|i| fit_prepared(&prepared, box_, base_seed.wrapping_add(i), budget))
        .collect();
    let params = average_params(per_run.iter().map(|r| &r.params));
    Ok(AveragedFit {
        params,
        train_accuracy: prepared.accuracy(&params),
        per_run,
    })
}

/// Arithmetic mean of each parameter.
pub fn average_params<'a>(runs: impl IntoIterator<Item = &'a DiscountParams>) -> DiscountParams {
    let mut sum = [0.0; 5];
    let mut n = 0usize;
    for p in runs {
        for (s, v) in sum.iter_mut().zip(p.to_array()) {
            *s += v;
        }
        n += 1;
    }
    assert!(n > 0, "cannot average zero runs");
    DiscountParams::from_array(sum.map(|s| s / n as f64))
}

/// The JSON report written next to fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub params: DiscountParams,
    pub train_accuracy: f64,
    pub seed: u64,
    pub budget: usize,
    pub repeats: usize,
    pub per_run: Vec<FitRun>,
}

impl FitReport {
    pub fn new(fit: AveragedFit, seed: u64, budget: usize, repeats: usize) -> Self {
        Self {
            params: fit.params,
            train_accuracy: fit.train_accuracy,
            seed,
            budget,
            repeats,
            per_run: fit.per_run,
        }
    }
}
