//! Record types shared by every stage of the toolkit, plus their
//! JSON-Lines and Pharaoh file formats.
//!
//! Character offsets are counted in Unicode scalar values, never bytes.

mod io;
mod prediction;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::tokenize::Tokenizer;

pub use io::{
    import_xnli, load_dataset, parse_dataset, parse_pharaoh, parse_pharaoh_links, read_pharaoh, read_pharaoh_links,
    write_dataset,
    write_dataset_to, write_pharaoh_to,
};
pub use prediction::{
    load_predictions, parse_predictions, write_predictions_to, LabelOrder, PredictedAnswer,
    PredictionOutput, PredictionRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliLabel {
    pub const ALL: [NliLabel; 3] = [NliLabel::Entailment, NliLabel::Neutral, NliLabel::Contradiction];

    pub fn as_str(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NliLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown NLI label {s:?}")))
    }
}

/// Where the text of a record came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    HumanTranslated,
    MachineTranslated,
    BackTranslated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::HumanTranslated => "human_translated",
            Provenance::MachineTranslated => "machine_translated",
            Provenance::BackTranslated => "back_translated",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Provenance::Original,
            Provenance::HumanTranslated,
            Provenance::MachineTranslated,
            Provenance::BackTranslated,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or_else(|| Error::arg(format!("unknown provenance {s:?}")))
    }
}

/// A BCP-47-style language tag such as `en`, `es` or `zh-Hans`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag(String);

impl LanguageTag {
    pub fn new(tag: impl Into<String>) -> Result<Self> {
        let tag = tag.into();
        let well_formed = !tag.is_empty()
            && tag
                .split('-')
                .all(|part| !part.is_empty() && part.len() <= 8 && part.chars().all(|c| c.is_ascii_alphanumeric()));
        if well_formed {
            Ok(LanguageTag(tag))
        } else {
            Err(Error::arg(format!("malformed language tag {tag:?}")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        LanguageTag::new(value)
    }
}

impl From<LanguageTag> for String {
    fn from(tag: LanguageTag) -> String {
        tag.0
    }
}

impl FromStr for LanguageTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LanguageTag::new(s)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NliExample {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: NliLabel,
    pub language: LanguageTag,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genre: Option<String>,
    /// Additional columns (stress-test category, matched/mismatched split,
    /// ...) carried through untouched.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl NliExample {
    pub fn validate(&self) -> Result<()> {
        if self.premise.trim().is_empty() {
            return Err(Error::invalid(&self.id, "premise", "empty after trimming"));
        }
        if self.hypothesis.trim().is_empty() {
            return Err(Error::invalid(&self.id, "hypothesis", "empty after trimming"));
        }
        Ok(())
    }

    /// Looks up a grouping field by name: `genre`, `language`, `provenance`,
    /// `label` or any extra column.
    pub fn field(&self, name: &str) -> Option<String> {
        match name {
            "genre" => self.genre.clone(),
            "language" => Some(self.language.to_string()),
            "provenance" => Some(self.provenance.to_string()),
            "label" => Some(self.label.to_string()),
            _ => self.extra.get(name).map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub text: String,
    pub char_start: usize,
    /// Set when projection failed and the untranslated source answer was
    /// kept; such answers are not offsets into the context.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

impl QaAnswer {
    pub fn new(text: impl Into<String>, char_start: usize) -> Self {
        QaAnswer {
            text: text.into(),
            char_start,
            fallback: false,
        }
    }

    pub fn char_end(&self) -> usize {
        self.char_start + self.text.chars().count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaExample {
    pub id: String,
    pub context: String,
    pub question: String,
    pub answers: Vec<QaAnswer>,
    pub language: LanguageTag,
    pub provenance: Provenance,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl QaExample {
    pub fn validate(&self) -> Result<()> {
        if self.answers.is_empty() {
            return Err(Error::invalid(&self.id, "answers", "no answers"));
        }
        for answer in self.answers.iter().filter(|a| !a.fallback) {
            match char_slice(&self.context, answer.char_start, answer.char_end()) {
                Some(found) if found == answer.text => {}
                found => {
                    return Err(Error::invalid(
                        &self.id,
                        "answers",
                        format!(
                            "answer {:?} at char {} does not match context ({:?})",
                            answer.text,
                            answer.char_start,
                            found.unwrap_or("<out of bounds>")
                        ),
                    ))
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Nli,
    Qa,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Nli => "nli",
            Task::Qa => "qa",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nli" => Ok(Task::Nli),
            "qa" => Ok(Task::Qa),
            _ => Err(Error::arg(format!("unknown task {s:?} (expected nli or qa)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Nli(Vec<NliExample>),
    Qa(Vec<QaExample>),
}

impl Dataset {
    pub fn task(&self) -> Task {
        match self {
            Dataset::Nli(_) => Task::Nli,
            Dataset::Qa(_) => Task::Qa,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Nli(records) => records.len(),
            Dataset::Qa(records) => records.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<&str> {
        match self {
            Dataset::Nli(records) => records.iter().map(|r| r.id.as_str()).collect(),
            Dataset::Qa(records) => records.iter().map(|r| r.id.as_str()).collect(),
        }
    }

    /// Checks every record invariant and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        match self {
            Dataset::Nli(records) => records.iter().try_for_each(NliExample::validate)?,
            Dataset::Qa(records) => records.iter().try_for_each(QaExample::validate)?,
        }
        let mut seen = BTreeSet::new();
        for id in self.ids() {
            if !seen.insert(id) {
                return Err(Error::invalid(id, "id", "duplicate id"));
            }
        }
        Ok(())
    }

    pub fn as_nli(&self) -> Result<&[NliExample]> {
        match self {
            Dataset::Nli(records) => Ok(records),
            Dataset::Qa(_) => Err(Error::arg("expected an NLI dataset")),
        }
    }

    pub fn as_qa(&self) -> Result<&[QaExample]> {
        match self {
            Dataset::Qa(records) => Ok(records),
            Dataset::Nli(_) => Err(Error::arg("expected a QA dataset")),
        }
    }
}

/// A sentence pair together with its deterministic tokenization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitextPair {
    pub source: String,
    pub target: String,
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
}

impl BitextPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>, tokenizer: Tokenizer) -> Self {
        let source = source.into();
        let target = target.into();
        let source_tokens = tokenizer.surfaces(&source);
        let target_tokens = tokenizer.surfaces(&target);
        BitextPair {
            source,
            target,
            source_tokens,
            target_tokens,
        }
    }

    /// Builds a pair from already-tokenized text, joining tokens with spaces.
    pub fn from_tokens(source_tokens: Vec<String>, target_tokens: Vec<String>) -> Self {
        BitextPair {
            source: source_tokens.join(" "),
            target: target_tokens.join(" "),
            source_tokens,
            target_tokens,
        }
    }

    pub fn reversed(&self) -> BitextPair {
        BitextPair {
            source: self.target.clone(),
            target: self.source.clone(),
            source_tokens: self.target_tokens.clone(),
            target_tokens: self.source_tokens.clone(),
        }
    }
}

/// Word links of one sentence pair; `(i, j)` links source token `i` to
/// target token `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alignment {
    pub pair_index: usize,
    pub src_len: usize,
    pub tgt_len: usize,
    pub links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn new(
        pair_index: usize,
        src_len: usize,
        tgt_len: usize,
        links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in links {
            if i >= src_len || j >= tgt_len {
                return Err(Error::invalid(
                    format!("pair {pair_index}"),
                    "links",
                    format!("link {i}-{j} outside {src_len}x{tgt_len}"),
                ));
            }
            if !set.insert((i, j)) {
                return Err(Error::invalid(
                    format!("pair {pair_index}"),
                    "links",
                    format!("duplicate link {i}-{j}"),
                ));
            }
        }
        Ok(Alignment {
            pair_index,
            src_len,
            tgt_len,
            links: set,
        })
    }

    pub fn empty(pair_index: usize, src_len: usize, tgt_len: usize) -> Self {
        Alignment {
            pair_index,
            src_len,
            tgt_len,
            links: BTreeSet::new(),
        }
    }

    /// Swaps the roles of source and target.
    pub fn transposed(&self) -> Alignment {
        Alignment {
            pair_index: self.pair_index,
            src_len: self.tgt_len,
            tgt_len: self.src_len,
            links: self.links.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    pub fn to_pharaoh(&self) -> String {
        self.links
            .iter()
            .map(|(i, j)| format!("{i}-{j}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Parses one Pharaoh line (`"0-1 1-0 2-2"`) into raw links.
pub fn parse_pharaoh_line(line: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    line.split_whitespace()
        .map(|item| {
            let (i, j) = item
                .split_once('-')
                .ok_or_else(|| format!("malformed link {item:?}"))?;
            let i = i.parse().map_err(|_| format!("malformed link {item:?}"))?;
            let j = j.parse().map_err(|_| format!("malformed link {item:?}"))?;
            Ok((i, j))
        })
        .collect()
}

/// Substring by Unicode-scalar offsets `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let begin = indices.nth(start)?;
    let finish = if end == start {
        begin
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[begin..finish])
}
