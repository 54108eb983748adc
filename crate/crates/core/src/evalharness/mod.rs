//! Plain vs discounted evaluation on labelled pairs.
//!
//! `Same` is the positive class. Besides the confusion-matrix metrics a
//! report carries the similarity-vs-log-frequency fits for each gold label
//! (plain and discounted), how much discounting flattened those slopes, and
//! the human vs predicted `Same` rate over equal-count frequency bins.

pub mod pairs;
pub mod wic;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrate::{CalibrateError, LabeledPair, PreparedPairs};
use crate::simcore::{judge, DiscountParams, Label};
use crate::stats::{equal_count_bins, ols_fit, FitLine, StatsError};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no pairs to evaluate")]
    Empty,
    #[error("{items} pairs cannot fill {bins} bins")]
    TooFewForBins { items: usize, bins: usize },
    #[error("input lengths differ")]
    LengthMismatch,
    #[error("plain slope is zero; gradient reduction is undefined")]
    ZeroPlainSlope,
    #[error(transparent)]
    Pairs(#[from] CalibrateError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plain,
    Discounted,
}

impl Mode {
    /// Parameters actually applied: plain mode keeps only the threshold.
    pub fn effective(self, params: &DiscountParams) -> DiscountParams {
        match self {
            Mode::Plain => params.without_discount(),
            Mode::Discounted => *params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    /// Set when the metric's denominator was zero and it was reported as 0.
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
    pub f1_degenerate: bool,
}

impl Metrics {
    pub fn from_labels(gold: &[Label], predicted: &[Label]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (g, p) in gold.iter().zip(predicted) {
            match (g, p) {
                (Label::Same, Label::Same) => tp += 1,
                (Label::Different, Label::Same) => fp += 1,
                (Label::Different, Label::Different) => tn += 1,
                (Label::Same, Label::Different) => fn_ += 1,
            }
        }
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (precision, precision_degenerate) = ratio(tp, tp + fp);
        let (recall, recall_degenerate) = ratio(tp, tp + fn_);
        let (f1, f1_degenerate) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), false)
        } else {
            (0.0, true)
        };
        let total = tp + fp + tn + fn_;
        Self {
            accuracy: if total == 0 {
                0.0
            } else {
                (tp + tn) as f64 / total as f64
            },
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
            precision_degenerate,
            recall_degenerate,
            f1_degenerate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinRow {
    /// 1-based, lowest frequencies first.
    pub bin: usize,
    pub count: usize,
    pub human_rate: f64,
    pub pred_rate: f64,
    pub mean_log_freq: f64,
    pub min_log_freq: f64,
    pub max_log_freq: f64,
}

/// Human vs predicted `Same` rates over equal-count log-frequency bins.
pub fn bin_analysis(
    log_freqs: &[f64],
    gold: &[Label],
    predicted: &[Label],
    num_bins: usize,
) -> Result<Vec<BinRow>, EvalError> {
    if log_freqs.len() != gold.len() || gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch);
    }
    if log_freqs.len() < num_bins {
        return Err(EvalError::TooFewForBins {
            items: log_freqs.len(),
            bins: num_bins,
        });
    }
    let bins = equal_count_bins(log_freqs, num_bins)?;
    let mut rows: Vec<BinRow> = (0..num_bins)
        .map(|b| BinRow {
            bin: b + 1,
            count: 0,
            human_rate: 0.0,
            pred_rate: 0.0,
            mean_log_freq: 0.0,
            min_log_freq: bins.bounds[b].0,
            max_log_freq: bins.bounds[b].1,
        })
        .collect();
    for (i, &b) in bins.assignments.iter().enumerate() {
        let row = &mut rows[b];
        row.count += 1;
        row.human_rate += f64::from(u8::from(gold[i].is_same()));
        row.pred_rate += f64::from(u8::from(predicted[i].is_same()));
        row.mean_log_freq += log_freqs[i];
    }
    for row in &mut rows {
        let n = row.count as f64;
        row.human_rate /= n;
        row.pred_rate /= n;
        row.mean_log_freq /= n;
    }
    Ok(rows)
}

/// Percentage by which discounting flattened a slope: `100 * (1 - d / p)`.
pub fn gradient_reduction(plain: &FitLine, discounted: &FitLine) -> Result<f64, EvalError> {
    if plain.slope == 0.0 {
        return Err(EvalError::ZeroPlainSlope);
    }
    Ok(100.0 * (1.0 - discounted.slope / plain.slope))
}

/// Similarity-vs-log-frequency fits for one gold label. A fit is absent when
/// the label has fewer than two pairs or no spread in log-frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabelFits {
    pub plain: Option<FitLine>,
    pub discounted: Option<FitLine>,
    pub gradient_reduction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterFits {
    pub same: LabelFits,
    pub different: LabelFits,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub word: String,
    pub log_freq: f64,
    pub gold: Label,
    pub score_plain: f64,
    pub score_discounted: f64,
    pub predicted: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub metrics: Metrics,
    /// Absent when there are fewer pairs than bins.
    pub per_bin: Option<Vec<BinRow>>,
    pub scatter: ScatterFits,
    #[serde(skip)]
    pub points: Vec<ScatterPoint>,
}

fn label_fits(points: &[ScatterPoint], label: Label) -> LabelFits {
    let fit_of = |score: fn(&ScatterPoint) -> f64| {
        let xy: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.gold == label)
            .map(|p| (p.log_freq, score(p)))
            .collect();
        ols_fit(&xy).ok()
    };
    let plain = fit_of(|p| p.score_plain);
    let discounted = fit_of(|p| p.score_discounted);
    let gradient_reduction = match (&plain, &discounted) {
        (Some(p), Some(d)) => gradient_reduction(p, d).ok(),
        _ => None,
    };
    LabelFits {
        plain,
        discounted,
        gradient_reduction,
    }
}

/// Scores every pair under `mode` and assembles the full report.
pub fn evaluate(
    pairs: &[LabeledPair],
    params: &DiscountParams,
    mode: Mode,
    num_bins: usize,
) -> Result<EvalReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let prepared = PreparedPairs::new(pairs)?;
    let effective = mode.effective(params);
    let points: Vec<ScatterPoint> = (0..prepared.len())
        .into_par_iter()
        .map(|i| {
            let score = prepared.score(i, &effective);
            ScatterPoint {
                word: pairs[i].word.clone(),
                log_freq: prepared.log_freq(i),
                gold: prepared.gold(i),
                score_plain: prepared.plain_score(i),
                score_discounted: score,
                predicted: judge(score, effective.theta),
            }
        })
        .collect();
    let gold: Vec<Label> = points.iter().map(|p| p.gold).collect();
    let predicted: Vec<Label> = points.iter().map(|p| p.predicted).collect();
    let log_freqs: Vec<f64> = points.iter().map(|p| p.log_freq).collect();
    let per_bin = if pairs.len() >= num_bins {
        Some(bin_analysis(&log_freqs, &gold, &predicted, num_bins)?)
    } else {
        None
    };
    Ok(EvalReport {
        n: pairs.len(),
        metrics: Metrics::from_labels(&gold, &predicted),
        per_bin,
        scatter: ScatterFits {
            same: label_fits(&points, Label::Same),
            different: label_fits(&points, Label::Different),
        },
        points,
    })
}

/// `bin,human_rate,pred_rate,mean_logfreq`
pub fn write_bins_csv<W: Write>(out: W, rows: &[BinRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "human_rate", "pred_rate", "mean_logfreq"])?;
    for r in rows {
        w.write_record([
            r.bin.to_string(),
            r.human_rate.to_string(),
            r.pred_rate.to_string(),
            r.mean_log_freq.to_string(),
        ])?;
    }
    w.flush()
}

/// `word,logfreq,label,score_plain,score_discounted`
pub fn write_scatter_csv<W: Write>(out: W, points: &[ScatterPoint]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "word",
        "logfreq",
        "label",
        "score_plain",
        "score_discounted",
    ])?;
    for p in points {
        w.write_record([
            p.word.clone(),
            p.log_freq.to_string(),
            p.gold.as_str().to_owned(),
            p.score_plain.to_string(),
            p.score_discounted.to_string(),
        ])?;
    }
    w.flush()
}
