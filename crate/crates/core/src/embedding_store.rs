//! Contextualised instance embeddings grouped into per-word sibling sets.
//!
//! The instance file is JSON Lines. An optional first line `{"dim": N}` fixes
//! the dimension; otherwise the first record does. Each record is
//! `{"word": .., "instance_id": .., "vector": [..]}`.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freqstats::{FrequencyTable, StopWordList};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("read failed at line {line}: {source}")]
    Read {
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: vector has dimension {found}, store dimension is {expected}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: vector component {index} is not finite")]
    NonFinite { line: usize, index: usize },
    #[error("line {line}: duplicate instance_id {instance_id:?} for word {word:?}")]
    DuplicateInstance {
        line: usize,
        word: String,
        instance_id: String,
    },
    #[error("sibling set must contain at least one embedding")]
    EmptySiblingSet,
    #[error("sibling set for {expected:?} cannot hold an embedding of {found:?}")]
    WordMismatch { expected: String, found: String },
}

impl StoreError {
    pub fn is_io(&self) -> bool {
        matches!(self, StoreError::Open { .. } | StoreError::Read { .. })
    }
}

/// One contextualised occurrence of a word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEmbedding {
    pub word: String,
    pub instance_id: String,
    pub vector: Vec<f64>,
}

/// Every embedding of one word across its contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct SiblingSet {
    word: String,
    members: Vec<InstanceEmbedding>,
}

impl SiblingSet {
    pub fn new(members: Vec<InstanceEmbedding>) -> Result<Self, StoreError> {
        let word = members
            .first()
            .ok_or(StoreError::EmptySiblingSet)?
            .word
            .clone();
        if let Some(other) = members.iter().find(|m| m.word != word) {
            return Err(StoreError::WordMismatch {
                expected: word,
                found: other.word.clone(),
            });
        }
        Ok(Self { word, members })
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn members(&self) -> &[InstanceEmbedding] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSiblingEmbedding {
    pub word: String,
    pub vector: Vec<f64>,
    pub support: usize,
}

/// Componentwise mean of a sibling set.
pub fn mean_sibling(set: &SiblingSet) -> MeanSiblingEmbedding {
    let dim = set.members[0].vector.len();
    let mut sum = vec![0.0f64; dim];
    for m in &set.members {
        for (acc, &v) in sum.iter_mut().zip(&m.vector) {
            *acc += v;
        }
    }
    let n = set.members.len() as f64;
    sum.iter_mut().for_each(|v| *v /= n);
    MeanSiblingEmbedding {
        word: set.word.clone(),
        vector: sum,
        support: set.members.len(),
    }
}

/// Euclidean norm.
pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sibling sets indexed by word, all sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    sets: BTreeMap<String, SiblingSet>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dim: usize,
}

#[derive(Deserialize)]
struct RawInstance {
    word: String,
    instance_id: String,
    vector: Vec<Option<f64>>,
}

/// Parses a JSON line, turning bare `NaN`/`Infinity` tokens (as emitted by
/// some JSON writers) into `null` so they surface as non-finite components
/// instead of generic syntax errors.
pub(crate) fn parse_json_line<T: serde::de::DeserializeOwned>(
    text: &str,
) -> Result<T, serde_json::Error> {
    match serde_json::from_str(text) {
        Ok(v) => Ok(v),
        Err(e) => match replace_nonfinite_literals(text) {
            Some(patched) => serde_json::from_str(&patched).map_err(|_| e),
            None => Err(e),
        },
    }
}

fn replace_nonfinite_literals(text: &str) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut changed = false;
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
        } else if c == '"' {
            in_string = true;
        } else {
            let literal = ["-Infinity", "Infinity", "NaN"]
                .into_iter()
                .find(|lit| rest.starts_with(lit));
            if let Some(lit) = literal {
                out.push_str("null");
                rest = &rest[lit.len()..];
                changed = true;
                continue;
            }
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    changed.then_some(out)
}

pub(crate) fn finite_vector(raw: Vec<Option<f64>>, line: usize) -> Result<Vec<f64>, StoreError> {
    raw.into_iter()
        .enumerate()
        .map(|(index, v)| match v {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(StoreError::NonFinite { line, index }),
        })
        .collect()
}

impl EmbeddingStore {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, StoreError> {
        let mut dim: Option<usize> = None;
        let mut grouped: BTreeMap<String, Vec<InstanceEmbedding>> = BTreeMap::new();
        let mut seen: HashSet<(String, String)> = HashSet::new();
        let mut first_content = true;

        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|source| StoreError::Read {
                line: lineno,
                source,
            })?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if first_content {
                first_content = false;
                if let Ok(h) = serde_json::from_str::<Header>(text) {
                    if h.dim == 0 {
                        return Err(StoreError::Parse {
                            line: lineno,
                            reason: "header dim must be positive".into(),
                        });
                    }
                    dim = Some(h.dim);
                    continue;
                }
            }
            let raw: RawInstance = parse_json_line(text).map_err(|e| StoreError::Parse {
                line: lineno,
                reason: e.to_string(),
            })?;
            let expected = *dim.get_or_insert(raw.vector.len());
            if expected == 0 {
                return Err(StoreError::Parse {
                    line: lineno,
                    reason: "vector is empty".into(),
                });
            }
            if raw.vector.len() != expected {
                return Err(StoreError::Dimension {
                    line: lineno,
                    expected,
                    found: raw.vector.len(),
                });
            }
            let vector = finite_vector(raw.vector, lineno)?;
            if !seen.insert((raw.word.clone(), raw.instance_id.clone())) {
                return Err(StoreError::DuplicateInstance {
                    line: lineno,
                    word: raw.word,
                    instance_id: raw.instance_id,
                });
            }
            grouped
                .entry(raw.word.clone())
                .or_default()
                .push(InstanceEmbedding {
                    word: raw.word,
                    instance_id: raw.instance_id,
                    vector,
                });
        }

        let sets = grouped
            .into_iter()
            .map(|(w, members)| Ok((w, SiblingSet::new(members)?)))
            .collect::<Result<_, StoreError>>()?;
        Ok(Self {
            dim: dim.unwrap_or(0),
            sets,
        })
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let file = File::open(path).map_err(|source| StoreError::Open {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(BufReader::new(file))
    }

    /// Builds a store from in-memory instances with the same checks as loading.
    pub fn from_instances(
        instances: impl IntoIterator<Item = InstanceEmbedding>,
    ) -> Result<Self, StoreError> {
        let mut dim = None;
        let mut grouped: BTreeMap<String, Vec<InstanceEmbedding>> = BTreeMap::new();
        for (i, inst) in instances.into_iter().enumerate() {
            let expected = *dim.get_or_insert(inst.vector.len());
            if inst.vector.len() != expected {
                return Err(StoreError::Dimension {
                    line: i + 1,
                    expected,
                    found: inst.vector.len(),
                });
            }
            if let Some(index) = inst.vector.iter().position(|x| !x.is_finite()) {
                return Err(StoreError::NonFinite { line: i + 1, index });
            }
            let members = grouped.entry(inst.word.clone()).or_default();
            if members.iter().any(|m| m.instance_id == inst.instance_id) {
                return Err(StoreError::DuplicateInstance {
                    line: i + 1,
                    word: inst.word,
                    instance_id: inst.instance_id,
                });
            }
            members.push(inst);
        }
        let sets = grouped
            .into_iter()
            .map(|(w, members)| Ok((w, SiblingSet::new(members)?)))
            .collect::<Result<_, StoreError>>()?;
        Ok(Self {
            dim: dim.unwrap_or(0),
            sets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&SiblingSet> {
        self.sets.get(word)
    }

    /// Sibling sets in word order.
    pub fn sibling_sets(&self) -> impl Iterator<Item = &SiblingSet> {
        self.sets.values()
    }
}

/// One word's position on the norm-vs-frequency plot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormPoint {
    pub word: String,
    pub log_freq: f64,
    pub norm: f64,
    pub support: usize,
    pub missing_freq: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NormFreqPoints {
    pub stop: Vec<NormPoint>,
    pub non_stop: Vec<NormPoint>,
}

/// Mean-sibling norm against log-frequency for every word, split by stop class.
pub fn norm_freq_points(
    store: &EmbeddingStore,
    table: &FrequencyTable,
    stops: &StopWordList,
) -> NormFreqPoints {
    use rayon::prelude::*;
    let sets: Vec<&SiblingSet> = store.sibling_sets().collect();
    let points: Vec<(bool, NormPoint)> = sets
        .par_iter()
        .map(|set| {
            let mean = mean_sibling(set);
            let lf = table.log_frequency(set.word());
            (
                stops.is_stop(set.word()),
                NormPoint {
                    word: mean.word,
                    log_freq: lf.value,
                    norm: l2_norm(&mean.vector),
                    support: mean.support,
                    missing_freq: lf.missing,
                },
            )
        })
        .collect();
    let mut out = NormFreqPoints::default();
    for (is_stop, p) in points {
        if is_stop {
            out.stop.push(p);
        } else {
            out.non_stop.push(p);
        }
    }
    out
}
