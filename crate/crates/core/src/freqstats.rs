//! Corpus word-frequency statistics.
//!
//! Tokens are produced by a fixed rule: lowercase the text, split on Unicode
//! whitespace, strip every non-alphanumeric character from both ends of each
//! piece, and drop what is left empty. Log-frequencies are natural logs of raw
//! counts. A word that never occurred is treated as having count 1 (log 0.0)
//! and is reported with a `missing` flag so callers can see the gap.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Error)]
pub enum FreqError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("read failed at byte offset {offset}: {source}")]
    Read {
        offset: u64,
        #[source]
        source: io::Error,
    },
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: u64 },
    #[error("frequency table line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("frequency table is empty")]
    EmptyTable,
    #[error("number of histogram buckets must be at least 1")]
    NoBuckets,
}

impl FreqError {
    /// True when the failure came from the filesystem rather than the data.
    pub fn is_io(&self) -> bool {
        matches!(self, FreqError::Open { .. } | FreqError::Read { .. })
    }
}

/// Splits text into lowercased word tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|piece| {
        let token = piece.trim_matches(|c: char| !c.is_alphanumeric());
        if token.is_empty() {
            None
        } else {
            Some(token.to_lowercase())
        }
    })
}

/// Word occurrence counts for a corpus.
///
/// Only words seen at least once are stored, and `total_tokens` is always the
/// sum of the stored counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total_tokens: u64,
}

/// Natural-log frequency of a word, with a flag for words absent from the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFreq {
    pub value: f64,
    pub missing: bool,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from explicit counts. Zero counts are rejected and
    /// repeated words are summed.
    pub fn from_counts<I, S>(counts: I) -> Result<Self, FreqError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut table = Self::new();
        for (i, (word, count)) in counts.into_iter().enumerate() {
            let word = word.into();
            if count == 0 {
                return Err(FreqError::Malformed {
                    line: i + 1,
                    reason: format!("count for {word:?} must be at least 1"),
                });
            }
            table.add(word, count);
        }
        Ok(table)
    }

    fn add(&mut self, word: String, count: u64) {
        *self.counts.entry(word).or_insert(0) += count;
        self.total_tokens += count;
    }

    pub fn add_token(&mut self, token: &str) {
        match self.counts.get_mut(token) {
            Some(c) => *c += 1,
            None => {
                self.counts.insert(token.to_owned(), 1);
            }
        }
        self.total_tokens += 1;
    }

    /// Adds every count of `other` into `self`.
    pub fn merge(&mut self, other: &FrequencyTable) {
        for (word, &count) in &other.counts {
            self.add(word.clone(), count);
        }
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Looks up `ln(count)` for the lowercased word. Absent words get 0.0
    /// with `missing` set.
    pub fn log_frequency(&self, word: &str) -> LogFreq {
        let key = word.to_lowercase();
        match self.counts.get(&key) {
            Some(&c) => LogFreq {
                value: (c as f64).ln(),
                missing: false,
            },
            None => LogFreq {
                value: 0.0,
                missing: true,
            },
        }
    }

    /// Entries ordered by descending count, then word.
    pub fn sorted_entries(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<(&str, u64)> =
            self.counts.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#total\t{}", self.total_tokens)?;
        for (word, count) in self.sorted_entries() {
            writeln!(out, "{word}\t{count}")?;
        }
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table words are valid UTF-8")
    }

    /// Parses the TSV form written by [`FrequencyTable::write_tsv`].
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self, FreqError> {
        let mut table = Self::new();
        let mut declared_total: Option<u64> = None;
        let mut offset = 0u64;
        for (i, line) in reader.split(b'\n').enumerate() {
            let lineno = i + 1;
            let raw = line.map_err(|source| FreqError::Read { offset, source })?;
            let start = offset;
            offset += raw.len() as u64 + 1;
            let text = std::str::from_utf8(&raw).map_err(|e| FreqError::InvalidUtf8 {
                offset: start + e.valid_up_to() as u64,
            })?;
            let text = text.strip_suffix('\r').unwrap_or(text);
            if text.is_empty() {
                continue;
            }
            let malformed = |reason: String| FreqError::Malformed {
                line: lineno,
                reason,
            };
            let (key, value) = text
                .split_once('\t')
                .ok_or_else(|| malformed("expected `word<TAB>count`".into()))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| malformed(format!("bad count {value:?}")))?;
            if key == "#total" {
                if lineno != 1 {
                    return Err(malformed("#total header must be the first line".into()));
                }
                declared_total = Some(value);
                continue;
            }
            if key.is_empty() {
                return Err(malformed("empty word".into()));
            }
            if value == 0 {
                return Err(malformed(format!("count for {key:?} must be at least 1")));
            }
            if table.counts.contains_key(key) {
                return Err(malformed(format!("duplicate word {key:?}")));
            }
            table.add(key.to_owned(), value);
        }
        match declared_total {
            None => Err(FreqError::Malformed {
                line: 1,
                reason: "missing #total header".into(),
            }),
            Some(t) if t != table.total_tokens => Err(FreqError::Malformed {
                line: 1,
                reason: format!("#total is {t} but counts sum to {}", table.total_tokens),
            }),
            Some(_) => Ok(table),
        }
    }

    pub fn load(path: &Path) -> Result<Self, FreqError> {
        let file = File::open(path).map_err(|source| FreqError::Open {
            path: path.to_owned(),
            source,
        })?;
        Self::read_tsv(BufReader::new(file))
    }
}

/// Counts the tokens of a UTF-8 text stream.
pub fn count_corpus<R: Read>(reader: R) -> Result<FrequencyTable, FreqError> {
    let mut reader = BufReader::new(reader);
    let mut table = FrequencyTable::new();
    let mut buf = Vec::new();
    let mut offset = 0u64;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|source| FreqError::Read { offset, source })?;
        if n == 0 {
            break;
        }
        let line = std::str::from_utf8(&buf).map_err(|e| FreqError::InvalidUtf8 {
            offset: offset + e.valid_up_to() as u64,
        })?;
        for token in tokenize(line) {
            table.add_token(&token);
        }
        offset += n as u64;
    }
    Ok(table)
}

/// Counts several corpus files concurrently and merges the results.
pub fn count_files<P: AsRef<Path> + Sync>(paths: &[P]) -> Result<FrequencyTable, FreqError> {
    let shards = paths
        .par_iter()
        .map(|p| {
            let path = p.as_ref();
            let file = File::open(path).map_err(|source| FreqError::Open {
                path: path.to_owned(),
                source,
            })?;
            count_corpus(file)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = FrequencyTable::new();
    for shard in &shards {
        table.merge(shard);
    }
    Ok(table)
}

/// A set of lowercased stop words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWordList {
    words: BTreeSet<String>,
}

impl StopWordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Self { words }
    }

    /// The bundled English list (the 179-word NLTK English list).
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comment lines are skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, FreqError> {
        let text = std::fs::read(path).map_err(|source| FreqError::Open {
            path: path.to_owned(),
            source,
        })?;
        let text = String::from_utf8(text).map_err(|e| FreqError::InvalidUtf8 {
            offset: e.utf8_error().valid_up_to() as u64,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn is_stop(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Equal-width histogram over log-frequency, counting distinct words.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges from min to max log-frequency.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Bucket for a log-frequency value: the number of interior edges `<= x`.
    pub fn bucket_of(&self, x: f64) -> usize {
        if x <= self.edges[0] {
            return 0;
        }
        let interior = &self.edges[1..self.counts.len()];
        interior.partition_point(|&e| e <= x)
    }
}

pub fn frequency_histogram(
    table: &FrequencyTable,
    num_buckets: usize,
) -> Result<Histogram, FreqError> {
    if num_buckets == 0 {
        return Err(FreqError::NoBuckets);
    }
    if table.is_empty() {
        return Err(FreqError::EmptyTable);
    }
    let logs: Vec<f64> = table.counts.values().map(|&c| (c as f64).ln()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / num_buckets as f64;
    let mut edges: Vec<f64> = (0..num_buckets).map(|b| lo + b as f64 * width).collect();
    edges.push(hi);
    let mut hist = Histogram {
        edges,
        counts: vec![0; num_buckets],
    };
    for x in logs {
        let b = hist.bucket_of(x);
        hist.counts[b] += 1;
    }
    Ok(hist)
}
