//! Pair-embedding files: one JSON object per line,
//! `{"word", "pos", "gold": "T"|"F"|null, "vector1": [..], "vector2": [..]}`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrate::LabeledPair;
use crate::embedding_store::{finite_vector, parse_json_line, StoreError};
use crate::freqstats::{FrequencyTable, StopWordList};
use crate::simcore::Label;

#[derive(Debug, Error)]
pub enum PairFileError {
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
    Invalid { line: usize, reason: String },
}

impl PairFileError {
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            PairFileError::Open { .. } | PairFileError::Read { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub word: String,
    pub pos: String,
    pub gold: Option<Label>,
    pub vector1: Vec<f64>,
    pub vector2: Vec<f64>,
    /// 1-based line in the source file, 0 for records built in memory.
    pub line: usize,
}

#[derive(Deserialize)]
struct RawPair {
    word: String,
    #[serde(default)]
    pos: String,
    gold: Option<String>,
    vector1: Vec<Option<f64>>,
    vector2: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct OutPair<'a> {
    word: &'a str,
    pos: &'a str,
    gold: Option<&'static str>,
    vector1: &'a [f64],
    vector2: &'a [f64],
}

fn gold_code(label: Label) -> &'static str {
    match label {
        Label::Same => "T",
        Label::Different => "F",
    }
}

pub fn read_pair_records<R: BufRead>(reader: R) -> Result<Vec<PairRecord>, PairFileError> {
    let mut out = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| PairFileError::Read {
            line: lineno,
            source,
        })?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let invalid = |reason: String| PairFileError::Invalid {
            line: lineno,
            reason,
        };
        let raw: RawPair = parse_json_line(text).map_err(|e| invalid(e.to_string()))?;
        let gold = match raw.gold.as_deref() {
            None => None,
            Some("T") => Some(Label::Same),
            Some("F") => Some(Label::Different),
            Some(other) => {
                return Err(invalid(format!(
                    "gold must be \"T\", \"F\" or null, found {other:?}"
                )))
            }
        };
        let store_err = |e: StoreError| invalid(e.to_string());
        let vector1 = finite_vector(raw.vector1, lineno).map_err(store_err)?;
        let vector2 = finite_vector(raw.vector2, lineno).map_err(store_err)?;
        let d = *dim.get_or_insert(vector1.len());
        if d == 0 || vector1.len() != d || vector2.len() != d {
            return Err(invalid(format!(
                "vector dimensions {} and {} (file dimension {d})",
                vector1.len(),
                vector2.len()
            )));
        }
        if vector1.iter().all(|&x| x == 0.0) || vector2.iter().all(|&x| x == 0.0) {
            return Err(invalid("zero vector".into()));
        }
        out.push(PairRecord {
            word: raw.word,
            pos: raw.pos,
            gold,
            vector1,
            vector2,
            line: lineno,
        });
    }
    Ok(out)
}

pub fn load_pair_records(path: &Path) -> Result<Vec<PairRecord>, PairFileError> {
    let file = File::open(path).map_err(|source| PairFileError::Open {
        path: path.to_owned(),
        source,
    })?;
    read_pair_records(BufReader::new(file))
}

pub fn write_pair_records<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = (&'a str, &'a str, Option<Label>, &'a [f64], &'a [f64])>,
) -> io::Result<()> {
    for (word, pos, gold, vector1, vector2) in records {
        let rec = OutPair {
            word,
            pos,
            gold: gold.map(gold_code),
            vector1,
            vector2,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes labelled pairs in pair-file form (frequency fields are dropped).
pub fn write_labeled_pairs<W: Write>(out: W, pairs: &[LabeledPair]) -> io::Result<()> {
    write_pair_records(
        out,
        pairs.iter().map(|p| {
            (
                p.word.as_str(),
                p.pos.as_str(),
                Some(p.gold),
                p.vector1.as_slice(),
                p.vector2.as_slice(),
            )
        }),
    )
}

/// Joins records with corpus frequencies and the stop list. Every record
/// must carry a gold label.
pub fn label_pairs(
    records: Vec<PairRecord>,
    table: &FrequencyTable,
    stops: &StopWordList,
) -> Result<Vec<LabeledPair>, PairFileError> {
    records
        .into_iter()
        .map(|r| {
            let gold = r.gold.ok_or_else(|| PairFileError::Invalid {
                line: r.line,
                reason: format!("pair for {:?} has no gold label", r.word),
            })?;
            let lf = table.log_frequency(&r.word);
            Ok(LabeledPair {
                stop: stops.is_stop(&r.word),
                log_freq: lf.value,
                freq_missing: lf.missing,
                word: r.word,
                pos: r.pos,
                vector1: r.vector1,
                vector2: r.vector2,
                gold,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Vec<PairRecord>, PairFileError> {
        read_pair_records(text.as_bytes())
    }

    #[test]
    fn reads_and_labels() {
        let text = r#"{"word":"bank","pos":"N","gold":"T","vector1":[1,0],"vector2":[1,1]}
{"word":"the","pos":"X","gold":"F","vector1":[0,1],"vector2":[1,0]}
{"word":"run","pos":"V","gold":null,"vector1":[0,1],"vector2":[1,0]}
"#;
        let recs = read(text).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[2].gold, None);
        let table = FrequencyTable::from_counts([("bank", 20), ("the", 1000)]).unwrap();
        let err = label_pairs(recs.clone(), &table, &StopWordList::english()).unwrap_err();
        assert!(matches!(err, PairFileError::Invalid { line: 3, .. }));
        let pairs = label_pairs(recs[..2].to_vec(), &table, &StopWordList::english()).unwrap();
        assert_eq!(pairs[0].gold, Label::Same);
        assert!(!pairs[0].stop);
        assert!(pairs[1].stop);
        assert!((pairs[1].log_freq - 1000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let bad_gold = r#"{"word":"a","gold":"Y","vector1":[1],"vector2":[1]}"#;
        assert!(matches!(
            read(bad_gold),
            Err(PairFileError::Invalid { line: 1, .. })
        ));
        let dims = r#"{"word":"a","gold":"T","vector1":[1,2],"vector2":[1]}"#;
        assert!(read(dims).is_err());
        let zero = r#"{"word":"a","gold":"T","vector1":[0,0],"vector2":[1,1]}"#;
        assert!(read(zero).is_err());
        let nan = r#"{"word":"a","gold":"T","vector1":[NaN,0],"vector2":[1,1]}"#;
        assert!(read(nan).unwrap_err().to_string().contains("not finite"));
        let across = "{\"word\":\"a\",\"gold\":\"T\",\"vector1\":[1,2],\"vector2\":[1,2]}\n\
                      {\"word\":\"b\",\"gold\":\"T\",\"vector1\":[1],\"vector2\":[1]}\n";
        assert!(matches!(
            read(across),
            Err(PairFileError::Invalid { line: 2, .. })
        ));
    }

    #[test]
    fn write_then_read() {
        let pairs = crate::synth::planted_pairs(
            &crate::synth::PlantedConfig {
                n_pairs: 12,
                ..Default::default()
            },
            2,
        );
        let mut buf = Vec::new();
        write_labeled_pairs(&mut buf, &pairs).unwrap();
        let recs = read_pair_records(&buf[..]).unwrap();
        assert_eq!(recs.len(), 12);
        for (r, p) in recs.iter().zip(&pairs) {
            assert_eq!(r.vector1, p.vector1);
            assert_eq!(r.gold, Some(p.gold));
        }
    }
}
