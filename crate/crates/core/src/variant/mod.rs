//! Translated training variants: translate once (`MT-XX`) or round-trip
//! through a pivot language (`BT-XX`).
//!
//! Every text field is translated whole and independently of the other
//! fields. All translations go through a [`TranslationCache`], so a text
//! that occurs several times in a run receives one translation.

mod backend;
mod cache;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, LanguageTag, NliExample, Provenance, QaExample};
use crate::error::{Error, Result};

pub use backend::{
    backend_selfcheck, Backend, BackendConfig, BackendFailure, BackendSource, CommandBackend, Direction,
    FnBackend, SelfCheckReport, TableBackend,
};
pub use cache::{escape_field, normalize_key, unescape_field, TranslationCache};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub name: String,
    pub steps: Vec<Direction>,
    pub provenance_out: Provenance,
}

impl PipelineSpec {
    pub fn new(name: impl Into<String>, steps: Vec<Direction>, provenance_out: Provenance) -> Result<Self> {
        let spec = PipelineSpec {
            name: name.into(),
            steps,
            provenance_out,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `BT-XX` and `MT-XX` names, e.g. `BT-FI` = source → fi → source.
    pub fn from_name(name: &str, source: &LanguageTag) -> Result<Self> {
        let (kind, lang) = name
            .split_once('-')
            .ok_or_else(|| Error::arg(format!("pipeline {name:?} must look like BT-FI or MT-ES")))?;
        let pivot = LanguageTag::new(lang.to_lowercase())?;
        let out = Direction::new(source.clone(), pivot.clone());
        match kind.to_ascii_uppercase().as_str() {
            "MT" => PipelineSpec::new(name, vec![out], Provenance::MachineTranslated),
            "BT" => PipelineSpec::new(
                name,
                vec![out, Direction::new(pivot, source.clone())],
                Provenance::BackTranslated,
            ),
            _ => Err(Error::arg(format!("unknown pipeline kind {kind:?} (BT or MT)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (first, last) = match (self.steps.first(), self.steps.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::arg(format!("pipeline {} has no steps", self.name))),
        };
        for pair in self.steps.windows(2) {
            if pair[0].target != pair[1].source {
                return Err(Error::arg(format!(
                    "pipeline {}: step {} does not chain into {}",
                    self.name, pair[0], pair[1]
                )));
            }
        }
        if self.provenance_out == Provenance::BackTranslated && last.target != first.source {
            return Err(Error::arg(format!(
                "back-translation pipeline {} must end in {}",
                self.name, first.source
            )));
        }
        Ok(())
    }

    pub fn source_language(&self) -> &LanguageTag {
        &self.steps[0].source
    }

    pub fn output_language(&self) -> &LanguageTag {
        &self.steps[self.steps.len() - 1].target
    }
}

/// Translates `texts`, consulting the cache first. Cache misses go to the
/// backend once each, in first-occurrence order and in batches, and are
/// journaled batch by batch so an interrupted run resumes where it failed.
pub fn cached_translate(
    texts: &[String],
    direction: &Direction,
    backend: &dyn Backend,
    cache: &mut TranslationCache,
) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut misses: Vec<(usize, &str)> = Vec::new();
    for (index, text) in texts.iter().enumerate() {
        let key = normalize_key(text);
        if cache.get(key, direction).is_none() && seen.insert(key) {
            misses.push((index, key));
        }
    }

    for batch in misses.chunks(backend.batch_size().max(1)) {
        let inputs: Vec<String> = batch.iter().map(|&(_, t)| t.to_owned()).collect();
        let (lines, failure) = match backend.translate_raw(&inputs, direction) {
            Ok(lines) if lines.len() == inputs.len() => (lines, None),
            Ok(lines) => {
                let message = format!("backend returned {} lines for {} inputs", lines.len(), inputs.len());
                (Vec::new(), Some((0, message)))
            }
            Err(f) => (f.partial, Some((f.index, f.message))),
        };
        for (k, line) in lines.into_iter().enumerate() {
            let (index, text) = batch[k];
            let translation = String::from_utf8(line).map_err(|_| Error::Backend {
                index,
                text: text.to_owned(),
                message: "output is not valid UTF-8".into(),
            })?;
            cache.insert(text, direction, translation)?;
        }
        cache.flush()?;
        if let Some((k, message)) = failure {
            let (index, text) = batch[k.min(batch.len() - 1)];
            return Err(Error::Backend {
                index,
                text: text.to_owned(),
                message,
            });
        }
    }

    Ok(texts
        .iter()
        .map(|t| {
            cache
                .get(t, direction)
                .expect("every miss was translated")
                .to_owned()
        })
        .collect())
}

/// Runs `texts` through every step of the pipeline.
pub fn translate_through(
    texts: Vec<String>,
    spec: &PipelineSpec,
    backend: &dyn Backend,
    cache: &mut TranslationCache,
) -> Result<Vec<String>> {
    spec.validate()?;
    spec.steps
        .iter()
        .try_fold(texts, |current, step| cached_translate(&current, step, backend, cache))
}

/// Context and question of a QA record after translation. Answer spans are
/// projected separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslatedQa {
    pub id: String,
    pub context: String,
    pub question: String,
    pub language: LanguageTag,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    Nli(Vec<NliExample>),
    Qa(Vec<TranslatedQa>),
}

impl Variant {
    pub fn into_nli(self) -> Option<Vec<NliExample>> {
        match self {
            Variant::Nli(v) => Some(v),
            Variant::Qa(_) => None,
        }
    }
}

pub fn build_nli_variant(
    records: &[NliExample],
    spec: &PipelineSpec,
    backend: &dyn Backend,
    cache: &mut TranslationCache,
) -> Result<Vec<NliExample>> {
    let texts = records
        .iter()
        .flat_map(|r| [r.premise.clone(), r.hypothesis.clone()])
        .collect();
    let translated = translate_through(texts, spec, backend, cache)?;
    let out: Vec<NliExample> = records
        .iter()
        .zip(translated.chunks_exact(2))
        .map(|(record, pair)| NliExample {
            premise: pair[0].clone(),
            hypothesis: pair[1].clone(),
            language: spec.output_language().clone(),
            provenance: spec.provenance_out,
            ..record.clone()
        })
        .collect();
    out.iter().try_for_each(NliExample::validate)?;
    Ok(out)
}

pub fn build_qa_variant(
    records: &[QaExample],
    spec: &PipelineSpec,
    backend: &dyn Backend,
    cache: &mut TranslationCache,
) -> Result<Vec<TranslatedQa>> {
    let texts = records
        .iter()
        .flat_map(|r| [r.context.clone(), r.question.clone()])
        .collect();
    let translated = translate_through(texts, spec, backend, cache)?;
    Ok(records
        .iter()
        .zip(translated.chunks_exact(2))
        .map(|(record, pair)| TranslatedQa {
            id: record.id.clone(),
            context: pair[0].clone(),
            question: pair[1].clone(),
            language: spec.output_language().clone(),
            provenance: spec.provenance_out,
        })
        .collect())
}

pub fn build_variant(
    dataset: &Dataset,
    spec: &PipelineSpec,
    backend: &dyn Backend,
    cache: &mut TranslationCache,
) -> Result<Variant> {
    Ok(match dataset {
        Dataset::Nli(records) => Variant::Nli(build_nli_variant(records, spec, backend, cache)?),
        Dataset::Qa(records) => Variant::Qa(build_qa_variant(records, spec, backend, cache)?),
    })
}
