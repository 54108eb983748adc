//! Reader for the WiC distribution format.
//!
//! Data lines are `word<TAB>POS<TAB>i-j<TAB>context1<TAB>context2`, where `i`
//! and `j` are whitespace-token indices of the target in each context. The
//! optional gold file has one `T` or `F` per line, aligned with the data.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::simcore::Label;

#[derive(Debug, Error)]
pub enum WicError {
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
    #[error("data line {line}: {reason}")]
    Data { line: usize, reason: String },
    #[error("gold line {line}: expected T or F, found {found:?}")]
    Gold { line: usize, found: String },
    #[error("gold file has {gold} labels but data file has {data} instances")]
    LengthMismatch { data: usize, gold: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WicInstance {
    pub word: String,
    pub pos: String,
    pub index1: usize,
    pub index2: usize,
    pub context1: String,
    pub context2: String,
    pub gold: Option<Label>,
}

impl WicInstance {
    /// The whitespace token at the target position of each context.
    pub fn targets(&self) -> (&str, &str) {
        let t1 = self
            .context1
            .split_whitespace()
            .nth(self.index1)
            .unwrap_or("");
        let t2 = self
            .context2
            .split_whitespace()
            .nth(self.index2)
            .unwrap_or("");
        (t1, t2)
    }
}

fn read_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, Result<String, WicError>)> {
    reader.lines().enumerate().map(|(i, l)| {
        let line = i + 1;
        (line, l.map_err(|source| WicError::Read { line, source }))
    })
}

pub fn parse_wic<R: BufRead, G: BufRead>(
    data: R,
    gold: Option<G>,
) -> Result<Vec<WicInstance>, WicError> {
    let mut out = Vec::new();
    for (line, text) in read_lines(data) {
        let text = text?;
        let text = text.strip_suffix('\r').unwrap_or(&text);
        if text.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| WicError::Data { line, reason };
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!(
                "expected 5 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let (i1, i2) = fields[2]
            .split_once('-')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
            .ok_or_else(|| bad(format!("unparseable index pair {:?}", fields[2])))?;
        for (idx, ctx, which) in [(i1, fields[3], 1), (i2, fields[4], 2)] {
            let n = ctx.split_whitespace().count();
            if idx >= n {
                return Err(bad(format!(
                    "index {idx} outside context{which} of {n} tokens"
                )));
            }
        }
        out.push(WicInstance {
            word: fields[0].to_owned(),
            pos: fields[1].to_owned(),
            index1: i1,
            index2: i2,
            context1: fields[3].to_owned(),
            context2: fields[4].to_owned(),
            gold: None,
        });
    }

    if let Some(gold) = gold {
        let mut labels = Vec::new();
        for (line, text) in read_lines(gold) {
            let text = text?;
            let label = match text.trim() {
                "" => continue,
                "T" => Label::Same,
                "F" => Label::Different,
                other => {
                    return Err(WicError::Gold {
                        line,
                        found: other.to_owned(),
                    })
                }
            };
            labels.push(label);
        }
        if labels.len() != out.len() {
            return Err(WicError::LengthMismatch {
                data: out.len(),
                gold: labels.len(),
            });
        }
        for (inst, label) in out.iter_mut().zip(labels) {
            inst.gold = Some(label);
        }
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>, WicError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| WicError::Open {
            path: path.to_owned(),
            source,
        })
}

pub fn parse_wic_files(data: &Path, gold: Option<&Path>) -> Result<Vec<WicInstance>, WicError> {
    let gold = gold.map(open).transpose()?;
    parse_wic(open(data)?, gold)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DRIVE: &str =
        "drive\tV\t1-1\tto drive sheep out of a field\tto drive the cows into the barn\n";

    fn parse(data: &str, gold: Option<&str>) -> Result<Vec<WicInstance>, WicError> {
        parse_wic(data.as_bytes(), gold.map(str::as_bytes))
    }

    #[test]
    fn parses_instance_with_gold() {
        let v = parse(DRIVE, Some("T\n")).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].word, "drive");
        assert_eq!(v[0].pos, "V");
        assert_eq!(v[0].gold, Some(Label::Same));
        assert_eq!(v[0].targets(), ("drive", "drive"));
    }

    #[test]
    fn gold_absent() {
        let v = parse(DRIVE, None).unwrap();
        assert_eq!(v[0].gold, None);
    }

    #[test]
    fn wrong_field_count_names_line() {
        let data = format!("{DRIVE}play\tN\t1-3\tthe play lasted two hours\n");
        match parse(&data, None) {
            Err(WicError::Data { line: 2, reason }) => assert!(reason.contains("5")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_indices() {
        let data = "play\tN\tx-3\ta b\tc d\n";
        assert!(matches!(
            parse(data, None),
            Err(WicError::Data { line: 1, .. })
        ));
        let data = "play\tN\t1-9\tthe play lasted\tthey made a futile play for power\n";
        assert!(matches!(
            parse(data, None),
            Err(WicError::Data { line: 1, .. })
        ));
    }

    #[test]
    fn gold_errors() {
        assert!(matches!(
            parse(DRIVE, Some("T\nF\n")),
            Err(WicError::LengthMismatch { data: 1, gold: 2 })
        ));
        assert!(matches!(
            parse(DRIVE, Some("yes\n")),
            Err(WicError::Gold { line: 1, .. })
        ));
    }
}
