//! Projection of QA answer spans onto a translated context through token
//! alignments.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{char_slice, Alignment, QaAnswer, QaExample};
use crate::error::{Error, Result};
use crate::tokenize::{TokenizedText, Tokenizer};
use crate::variant::TranslatedQa;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanOutcome {
    Mapped { char_start: usize, char_end: usize },
    NoAlignedTokens,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NoAlignedTokens,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    /// Drop examples with an unmappable answer.
    #[default]
    Discard,
    /// Keep them, carrying the untranslated answer text flagged as fallback.
    FallbackSourceAnswer,
}

impl FromStr for MapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discard" => Ok(MapMode::Discard),
            "fallback" | "fallback_source_answer" | "fallback-source-answer" => {
                Ok(MapMode::FallbackSourceAnswer)
            }
            other => Err(Error::arg(format!("unknown span mapping mode {other:?}"))),
        }
    }
}

impl fmt::Display for MapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapMode::Discard => "discard",
            MapMode::FallbackSourceAnswer => "fallback_source_answer",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discarded {
    pub id: String,
    pub reason: FailureReason,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanMapReport {
    pub mapped_count: usize,
    pub discarded: Vec<Discarded>,
    pub fallback_english: Vec<String>,
}

impl SpanMapReport {
    pub fn total(&self) -> usize {
        self.mapped_count + self.discarded.len() + self.fallback_english.len()
    }
}

/// Maps the character span `span` (end exclusive) of `src` onto `tgt`.
///
/// The result is the contiguous cover from the first to the last target token
/// linked to any source token overlapping the span.
pub fn map_span(
    src: &TokenizedText,
    tgt: &TokenizedText,
    span: (usize, usize),
    alignment: &Alignment,
) -> Result<SpanOutcome> {
    let (start, end) = span;
    if start >= end || end > src.char_len() {
        return Err(Error::arg(format!(
            "span {start}..{end} is outside a source text of {} characters",
            src.char_len()
        )));
    }
    if alignment.src_len != src.len() || alignment.tgt_len != tgt.len() {
        return Err(Error::arg(format!(
            "alignment is {}x{} but texts have {} and {} tokens",
            alignment.src_len,
            alignment.tgt_len,
            src.len(),
            tgt.len()
        )));
    }
    let covered: Vec<usize> = src
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.char_start < end && t.char_end > start)
        .map(|(i, _)| i)
        .collect();
    let (Some(&first), Some(&last)) = (covered.first(), covered.last()) else {
        return Err(Error::arg(format!("span {start}..{end} covers no source token")));
    };
    let mut targets = alignment
        .links
        .range((first, 0)..=(last, usize::MAX))
        .map(|&(_, j)| j);
    let Some(j0) = targets.next() else {
        return Ok(SpanOutcome::NoAlignedTokens);
    };
    let (lo, hi) = targets.fold((j0, j0), |(lo, hi), j| (lo.min(j), hi.max(j)));
    Ok(SpanOutcome::Mapped {
        char_start: tgt.tokens[lo].char_start,
        char_end: tgt.tokens[hi].char_end,
    })
}

enum Projected {
    Mapped(QaExample),
    Failed(QaExample),
}

fn project_example(
    record: &QaExample,
    translated: &TranslatedQa,
    alignment: &Alignment,
    tokenizer: Tokenizer,
) -> Result<Projected> {
    let src = tokenizer.tokenize(&record.context);
    let tgt = tokenizer.tokenize(&translated.context);
    let mut failed = false;
    let mut answers = Vec::with_capacity(record.answers.len());
    for answer in &record.answers {
        if answer.fallback {
            failed = true;
            answers.push(answer.clone());
            continue;
        }
        let outcome = map_span(&src, &tgt, (answer.char_start, answer.char_end()), alignment)
            .map_err(|e| Error::invalid(&record.id, "answers", e.to_string()))?;
        match outcome {
            SpanOutcome::Mapped {
                char_start,
                char_end,
            } => {
                let text = char_slice(&translated.context, char_start, char_end)
                    .expect("token offsets lie inside the text");
                answers.push(QaAnswer::new(text, char_start));
            }
            SpanOutcome::NoAlignedTokens => {
                failed = true;
                answers.push(QaAnswer {
                    text: answer.text.clone(),
                    char_start: answer.char_start,
                    fallback: true,
                });
            }
        }
    }
    let example = QaExample {
        id: record.id.clone(),
        context: translated.context.clone(),
        question: translated.question.clone(),
        answers,
        language: translated.language.clone(),
        provenance: translated.provenance,
        extra: record.extra.clone(),
    };
    Ok(if failed {
        Projected::Failed(example)
    } else {
        Projected::Mapped(example)
    })
}

/// Projects every record's answers onto its translation.
///
/// `translated[k]` and `alignments[k]` belong to `records[k]`; alignments
/// link source context tokens to translated context tokens under
/// `tokenizer`. An example fails when any of its answers has no aligned
/// token. Output order follows input order.
pub fn map_dataset(
    records: &[QaExample],
    translated: &[TranslatedQa],
    alignments: &[Alignment],
    mode: MapMode,
    tokenizer: Tokenizer,
) -> Result<(Vec<QaExample>, SpanMapReport)> {
    if let Some(missing) = records.get(alignments.len()) {
        return Err(Error::invalid(&missing.id, "alignment", "no alignment for this example"));
    }
    if let Some(missing) = records.get(translated.len()) {
        return Err(Error::invalid(&missing.id, "context", "no translation for this example"));
    }
    if alignments.len() > records.len() || translated.len() > records.len() {
        return Err(Error::arg(format!(
            "{} records but {} translations and {} alignments",
            records.len(),
            translated.len(),
            alignments.len()
        )));
    }
    if let Some((r, _)) = records
        .iter()
        .zip(translated)
        .find(|(r, t)| r.id != t.id)
    {
        return Err(Error::invalid(&r.id, "id", "translation belongs to a different record"));
    }

    let projected: Vec<Projected> = (0..records.len())
        .into_par_iter()
        .map(|k| project_example(&records[k], &translated[k], &alignments[k], tokenizer))
        .collect::<Result<_>>()?;

    let mut report = SpanMapReport::default();
    let mut out = Vec::with_capacity(projected.len());
    for p in projected {
        match (p, mode) {
            (Projected::Mapped(example), _) => {
                report.mapped_count += 1;
                out.push(example);
            }
            (Projected::Failed(example), MapMode::Discard) => report.discarded.push(Discarded {
                id: example.id,
                reason: FailureReason::NoAlignedTokens,
            }),
            (Projected::Failed(example), MapMode::FallbackSourceAnswer) => {
                report.fallback_english.push(example.id.clone());
                out.push(example);
            }
        }
    }
    Ok((out, report))
}
