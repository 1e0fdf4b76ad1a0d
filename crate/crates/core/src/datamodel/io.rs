use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::{
    parse_pharaoh_line, Alignment, Dataset, LanguageTag, NliExample, NliLabel, Provenance,
    QaExample, Task,
};
use crate::error::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Iterates the non-blank lines of a JSON-Lines stream as `(line_number, text)`.
pub(crate) fn jsonl_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| {
            let line_no = idx + 1;
            match line {
                Err(e) => Some(Err(Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })),
                Ok(text) if text.trim().is_empty() => None,
                Ok(text) if line_no == 1 && text.starts_with('\u{feff}') => Some(Err(Error::Parse {
                    line: 1,
                    message: "byte-order mark not allowed".into(),
                })),
                Ok(text) => Some(Ok((line_no, text))),
            }
        })
}

pub(crate) fn parse_line<T: DeserializeOwned>(line_no: usize, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })
}

pub fn parse_dataset<R: BufRead>(reader: R, task: Task) -> Result<Dataset> {
    let dataset = match task {
        Task::Nli => Dataset::Nli(parse_records::<NliExample, _>(reader)?),
        Task::Qa => Dataset::Qa(parse_records::<QaExample, _>(reader)?),
    };
    dataset.validate()?;
    Ok(dataset)
}

fn parse_records<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    jsonl_lines(reader)
        .map(|line| {
            let (line_no, text) = line?;
            parse_line(line_no, &text)
        })
        .collect()
}

/// Reads and validates a JSON-Lines dataset, preserving file order.
pub fn load_dataset(path: impl AsRef<Path>, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    parse_dataset(open(path)?, task)
}

pub fn write_dataset_to<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    fn write_all<T: Serialize, W: Write>(records: &[T], writer: &mut W) -> std::io::Result<()> {
        for record in records {
            serde_json::to_writer(&mut *writer, record)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()
    }
    match dataset {
        Dataset::Nli(records) => write_all(records, &mut writer),
        Dataset::Qa(records) => write_all(records, &mut writer),
    }
    .map_err(|e| Error::io("<output>", e))
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(dataset, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Imports XNLI/MultiNLI-style files into canonical NLI records.
///
/// Accepts JSON Lines using either the original column names
/// (`sentence1`, `sentence2`, `gold_label`, `pairID`) or the
/// `premise`/`hypothesis`/`label` layout with integer labels
/// (0 = entailment, 1 = neutral, 2 = contradiction), and tab-separated
/// files with a header row using the same names. Records lacking a
/// language get `default_language`.
pub fn import_xnli<R: Read>(
    reader: R,
    provenance: Provenance,
    default_language: &LanguageTag,
) -> Result<Vec<NliExample>> {
    let mut lines = BufReader::new(reader).lines().enumerate().peekable();
    let is_tsv = match lines.peek() {
        Some((_, Ok(first))) => !first.trim_start().starts_with('{'),
        _ => false,
    };

    let mut rows: Vec<(usize, BTreeMap<String, Value>)> = Vec::new();
    if is_tsv {
        let header: Vec<String> = match lines.next() {
            Some((_, Ok(h))) => h.split('\t').map(str::to_owned).collect(),
            _ => return Ok(Vec::new()),
        };
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let row = header
                .iter()
                .cloned()
                .zip(line.split('\t').map(|v| Value::String(v.to_owned())))
                .collect();
            rows.push((idx + 1, row));
        }
    } else {
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push((idx + 1, parse_line(idx + 1, &line)?));
        }
    }

    let mut out = Vec::with_capacity(rows.len());
    for (line_no, mut row) in rows {
        let mut take = |keys: &[&str]| keys.iter().find_map(|k| row.remove(*k));
        let as_string = |v: Value| match v {
            Value::String(s) => s,
            other => other.to_string(),
        };
        let missing = |field: &str| Error::Parse {
            line: line_no,
            message: format!("missing {field}"),
        };
        let id = take(&["id", "pairID", "pair_id", "idx"])
            .map(as_string)
            .unwrap_or_else(|| format!("line{line_no}"));
        let premise = take(&["premise", "sentence1"]).map(as_string).ok_or_else(|| missing("premise"))?;
        let hypothesis = take(&["hypothesis", "sentence2"])
            .map(as_string)
            .ok_or_else(|| missing("hypothesis"))?;
        let label = match take(&["label", "gold_label"]).ok_or_else(|| missing("label"))? {
            Value::Number(n) => match n.as_u64() {
                Some(i @ 0..=2) => NliLabel::ALL[i as usize],
                _ => return Err(missing("label in 0..=2")),
            },
            Value::String(s) => match s.trim() {
                "0" => NliLabel::Entailment,
                "1" => NliLabel::Neutral,
                "2" => NliLabel::Contradiction,
                "contradictory" => NliLabel::Contradiction,
                other => other.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("unknown label {other:?}"),
                })?,
            },
            _ => return Err(missing("label")),
        };
        let language = match take(&["language", "lang"]) {
            Some(v) => LanguageTag::new(as_string(v))?,
            None => default_language.clone(),
        };
        let genre = take(&["genre"]).map(as_string);
        let record = NliExample {
            id,
            premise,
            hypothesis,
            label,
            language,
            provenance,
            genre,
            extra: BTreeMap::new(),
        };
        record.validate()?;
        out.push(record);
    }
    Dataset::Nli(out.clone()).validate()?;
    Ok(out)
}

/// Reads raw links, one Pharaoh line per sentence pair.
pub fn read_pharaoh_links(path: impl AsRef<Path>) -> Result<Vec<Vec<(usize, usize)>>> {
    let path = path.as_ref();
    parse_pharaoh_links(open(path)?).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_pharaoh_links<R: BufRead>(reader: R) -> Result<Vec<Vec<(usize, usize)>>> {
    reader
        .lines()
        .enumerate()
        .map(|(idx, line)| {
            let line = line.map_err(|e| Error::io("<alignments>", e))?;
            parse_pharaoh_line(&line).map_err(|message| Error::Parse {
                line: idx + 1,
                message,
            })
        })
        .collect()
}

/// Reads Pharaoh alignments and checks them against the token counts of the
/// pairs they describe.
pub fn read_pharaoh(path: impl AsRef<Path>, lengths: &[(usize, usize)]) -> Result<Vec<Alignment>> {
    links_to_alignments(read_pharaoh_links(path)?, lengths)
}

pub fn parse_pharaoh<R: BufRead>(reader: R, lengths: &[(usize, usize)]) -> Result<Vec<Alignment>> {
    links_to_alignments(parse_pharaoh_links(reader)?, lengths)
}

fn links_to_alignments(raw: Vec<Vec<(usize, usize)>>, lengths: &[(usize, usize)]) -> Result<Vec<Alignment>> {
    if raw.len() != lengths.len() {
        return Err(Error::arg(format!(
            "alignment file has {} lines but there are {} sentence pairs",
            raw.len(),
            lengths.len()
        )));
    }
    raw.into_iter()
        .zip(lengths)
        .enumerate()
        .map(|(idx, (links, &(src_len, tgt_len)))| Alignment::new(idx, src_len, tgt_len, links))
        .collect()
}

pub fn write_pharaoh_to<W: Write>(alignments: &[Alignment], mut writer: W) -> Result<()> {
    (|| -> std::io::Result<()> {
        for alignment in alignments {
            writeln!(writer, "{}", alignment.to_pharaoh())?;
        }
        writer.flush()
    })()
    .map_err(|e| Error::io("<output>", e))
}
