//! Plain and frequency-discounted cosine similarity.
//!
//! The discounted cosine divides each vector's norm by a factor that falls
//! linearly with the word's log-frequency:
//!
//! ```text
//! alpha(w)  = 1 + m * (b - ln freq(w))      (m, b picked by stop-word class)
//! dcos(x,y) = x.y / (|x| alpha(x) |y| alpha(y))
//! ```
//!
//! `alpha` is floored at [`ALPHA_FLOOR`] so it stays positive for any finite
//! frequency. Discounted scores are not squashed back into `[-1, 1]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower clamp applied to the discount factor.
pub const ALPHA_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("vectors have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("invalid discount parameters: {0}")]
    InvalidParams(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed parameter file {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Threshold and per-class slope/intercept of the discount factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscountParams {
    pub theta: f64,
    pub m_s: f64,
    pub b_s: f64,
    pub m_n: f64,
    pub b_n: f64,
}

impl DiscountParams {
    pub const NAMES: [&'static str; 5] = ["theta", "m_s", "b_s", "m_n", "b_n"];

    pub fn new(theta: f64, m_s: f64, b_s: f64, m_n: f64, b_n: f64) -> Result<Self, SimError> {
        let p = Self {
            theta,
            m_s,
            b_s,
            m_n,
            b_n,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters calibrated on WiC train with bert-base-uncased and
    /// BookCorpus frequencies.
    pub fn bert_wic() -> Self {
        Self {
            theta: 0.545,
            m_s: 0.00422,
            b_s: 0.643,
            m_n: 0.00427,
            b_n: 4.821,
        }
    }

    /// Zero slopes: every alpha is exactly 1 and scores equal plain cosine.
    pub fn undiscounted(theta: f64) -> Self {
        Self {
            theta,
            m_s: 0.0,
            b_s: 0.0,
            m_n: 0.0,
            b_n: 0.0,
        }
    }

    /// Same threshold with the slopes zeroed.
    pub fn without_discount(&self) -> Self {
        Self {
            m_s: 0.0,
            m_n: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in Self::NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(SimError::InvalidParams(format!("{name} is not finite")));
            }
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(SimError::InvalidParams(format!(
                "theta {} outside [0, 1]",
                self.theta
            )));
        }
        if self.m_s < 0.0 || self.m_n < 0.0 {
            return Err(SimError::InvalidParams(
                "slopes must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `[theta, m_s, b_s, m_n, b_n]`
    pub fn to_array(&self) -> [f64; 5] {
        [self.theta, self.m_s, self.b_s, self.m_n, self.b_n]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            theta: a[0],
            m_s: a[1],
            b_s: a[2],
            m_n: a[3],
            b_n: a[4],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_owned(),
            source,
        })?;
        let p = Self::from_json(&text).map_err(|source| SimError::Json {
            path: path.to_owned(),
            source,
        })?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Same,
    Different,
}

impl Label {
    pub fn is_same(self) -> bool {
        self == Label::Same
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Same => "SAME",
            Label::Different => "DIFFERENT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityJudgement {
    pub score: f64,
    pub label: Label,
}

impl SimilarityJudgement {
    pub fn new(score: f64, theta: f64) -> Self {
        Self {
            score,
            label: judge(score, theta),
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64, SimError> {
    if x.len() != y.len() {
        return Err(SimError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let xx = dot(x, x);
    let yy = dot(y, y);
    if xx == 0.0 || yy == 0.0 {
        return Err(SimError::ZeroVector);
    }
    Ok((dot(x, y) / (xx * yy).sqrt()).clamp(-1.0, 1.0))
}

/// Discount factor for a word with the given log-frequency and class.
pub fn alpha(params: &DiscountParams, log_freq: f64, stop: bool) -> f64 {
    let (m, b) = if stop {
        (params.m_s, params.b_s)
    } else {
        (params.m_n, params.b_n)
    };
    (1.0 + m * (b - log_freq)).max(ALPHA_FLOOR)
}

/// A vector together with the frequency information its discount needs.
#[derive(Debug, Clone, Copy)]
pub struct WordVector<'a> {
    pub vector: &'a [f64],
    pub log_freq: f64,
    pub stop: bool,
}

/// Scales an already computed cosine by the two discount factors.
pub fn discount_score(cos: f64, alpha_x: f64, alpha_y: f64) -> f64 {
    cos / (alpha_x * alpha_y)
}

pub fn discounted_cosine(
    x: WordVector<'_>,
    y: WordVector<'_>,
    params: &DiscountParams,
) -> Result<f64, SimError> {
    let cos = cosine(x.vector, y.vector)?;
    Ok(discount_score(
        cos,
        alpha(params, x.log_freq, x.stop),
        alpha(params, y.log_freq, y.stop),
    ))
}

/// `Same` iff `score >= theta`.
pub fn judge(score: f64, theta: f64) -> Label {
    if score >= theta {
        Label::Same
    } else {
        Label::Different
    }
}
