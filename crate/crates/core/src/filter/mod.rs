//! Parallel-corpus filtering: length, length ratio and language checks.

mod langid;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{BitextPair, LanguageTag};
use crate::error::{Error, Result};
use crate::tokenize::Tokenizer;

pub use langid::{char_ngrams, classify_language, train_langid, LangIdConfig, LangIdModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub max_tokens: usize,
    pub max_ratio: f64,
    pub expected_source_lang: LanguageTag,
    pub expected_target_lang: LanguageTag,
    /// Disagreements below this confidence are not rejected.
    pub langid_min_confidence: f64,
    pub tokenizer: Tokenizer,
}

impl FilterConfig {
    pub fn new(source: LanguageTag, target: LanguageTag) -> Self {
        FilterConfig {
            max_tokens: 250,
            max_ratio: 1.5,
            expected_source_lang: source,
            expected_target_lang: target,
            langid_min_confidence: 0.0,
            tokenizer: Tokenizer::Whitespace,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_tokens < 1 {
            return Err(Error::arg("max_tokens must be at least 1"));
        }
        if !(self.max_ratio >= 1.0) {
            return Err(Error::arg("max_ratio must be at least 1.0"));
        }
        if !(0.0..=1.0).contains(&self.langid_min_confidence) {
            return Err(Error::arg("langid_min_confidence must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooLong,
    Ratio,
    LangidSource,
    LangidTarget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Reject(RejectReason),
}

/// Rules apply in order too-long, ratio, source language, target language;
/// the first failing rule names the rejection. Language rules are skipped
/// when no model is given.
pub fn filter_pair(pair: &BitextPair, model: Option<&LangIdModel>, config: &FilterConfig) -> Verdict {
    let src = pair.source_tokens.len();
    let tgt = pair.target_tokens.len();
    let (long, short) = (src.max(tgt), src.min(tgt));
    if long > config.max_tokens {
        return Verdict::Reject(RejectReason::TooLong);
    }
    if long as f64 > config.max_ratio * short.max(1) as f64 {
        return Verdict::Reject(RejectReason::Ratio);
    }
    if let Some(model) = model {
        let wrong = |text: &str, expected: &LanguageTag| match model.classify(text) {
            Ok((lang, conf)) => &lang != expected && conf >= config.langid_min_confidence,
            // empty side: nothing to identify
            Err(_) => false,
        };
        if wrong(&pair.source, &config.expected_source_lang) {
            return Verdict::Reject(RejectReason::LangidSource);
        }
        if wrong(&pair.target, &config.expected_target_lang) {
            return Verdict::Reject(RejectReason::LangidTarget);
        }
    }
    Verdict::Keep
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total_in: usize,
    pub total_out: usize,
    pub too_long: usize,
    pub ratio: usize,
    pub langid_source: usize,
    pub langid_target: usize,
}

impl FilterReport {
    pub fn record(&mut self, verdict: Verdict) {
        self.total_in += 1;
        match verdict {
            Verdict::Keep => self.total_out += 1,
            Verdict::Reject(RejectReason::TooLong) => self.too_long += 1,
            Verdict::Reject(RejectReason::Ratio) => self.ratio += 1,
            Verdict::Reject(RejectReason::LangidSource) => self.langid_source += 1,
            Verdict::Reject(RejectReason::LangidTarget) => self.langid_target += 1,
        }
    }

    pub fn merge(&mut self, other: &FilterReport) {
        self.total_in += other.total_in;
        self.total_out += other.total_out;
        self.too_long += other.too_long;
        self.ratio += other.ratio;
        self.langid_source += other.langid_source;
        self.langid_target += other.langid_target;
    }

    pub fn rejected(&self) -> usize {
        self.too_long + self.ratio + self.langid_source + self.langid_target
    }
}

const CHUNK: usize = 4096;

/// Filters a stream of pairs, keeping input order. Verdicts within a chunk
/// are computed in parallel.
pub fn filter_corpus<I>(
    pairs: I,
    model: Option<&LangIdModel>,
    config: &FilterConfig,
) -> Result<(Vec<BitextPair>, FilterReport)>
where
    I: IntoIterator<Item = Result<BitextPair>>,
{
    config.validate()?;
    let mut kept = Vec::new();
    let mut report = FilterReport::default();
    let mut iter = pairs.into_iter().peekable();
    while iter.peek().is_some() {
        let chunk: Vec<BitextPair> = iter.by_ref().take(CHUNK).collect::<Result<_>>()?;
        let verdicts: Vec<Verdict> = chunk
            .par_iter()
            .map(|pair| filter_pair(pair, model, config))
            .collect();
        for (pair, verdict) in chunk.into_iter().zip(verdicts) {
            report.record(verdict);
            if verdict == Verdict::Keep {
                kept.push(pair);
            }
        }
    }
    Ok((kept, report))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))
}

/// Reads two line-aligned plain-text files.
pub fn read_bitext(src: impl AsRef<Path>, tgt: impl AsRef<Path>, tokenizer: Tokenizer) -> Result<Vec<BitextPair>> {
    let sources = read_lines(src.as_ref())?;
    let targets = read_lines(tgt.as_ref())?;
    if sources.len() != targets.len() {
        return Err(Error::arg(format!(
            "bitext sides differ in length: {} vs {} lines",
            sources.len(),
            targets.len()
        )));
    }
    Ok(sources
        .into_iter()
        .zip(targets)
        .map(|(s, t)| BitextPair::new(s, t, tokenizer))
        .collect())
}

/// Reads `source<TAB>target` lines.
pub fn read_bitext_tsv(path: impl AsRef<Path>, tokenizer: Tokenizer) -> Result<Vec<BitextPair>> {
    read_lines(path.as_ref())?
        .into_iter()
        .enumerate()
        .map(|(idx, line)| {
            let (s, t) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected source<TAB>target".into(),
            })?;
            Ok(BitextPair::new(s, t, tokenizer))
        })
        .collect()
}
