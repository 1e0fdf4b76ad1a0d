//! Artifact diagnostics: lexical overlap, length statistics and predicted
//! class distributions.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{apply_bias_one, BiasVector};
use crate::datamodel::{Dataset, LabelOrder, NliExample, NliLabel, PredictionRecord};
use crate::error::{Error, Result};
use crate::tokenize::Tokenizer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    /// Number of examples measured; 0 for a declared target.
    pub support: usize,
}

impl ClassDistribution {
    pub fn from_counts(labels: &LabelOrder, counts: &[usize]) -> Result<Self> {
        if counts.len() != labels.len() {
            return Err(Error::arg(format!(
                "{} counts for {} labels",
                counts.len(),
                labels.len()
            )));
        }
        let support: usize = counts.iter().sum();
        if support == 0 {
            return Err(Error::arg("class distribution over zero examples"));
        }
        Ok(ClassDistribution {
            labels: labels.labels().to_vec(),
            probabilities: counts.iter().map(|&c| c as f64 / support as f64).collect(),
            support,
        })
    }

    /// A target distribution from non-negative weights, renormalized to sum
    /// to one.
    pub fn target(labels: &LabelOrder, weights: &[f64]) -> Result<Self> {
        if weights.len() != labels.len() {
            return Err(Error::arg(format!(
                "{} weights for {} labels",
                weights.len(),
                labels.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::arg("target weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::arg("target weights sum to zero"));
        }
        Ok(ClassDistribution {
            labels: labels.labels().to_vec(),
            probabilities: weights.iter().map(|w| w / total).collect(),
            support: 0,
        })
    }

    /// Parses `"entailment=0.333,neutral=0.333,contradiction=0.333"` or `"uniform"`.
    /// Every label of `labels` must appear exactly once.
    pub fn parse_target(spec: &str, labels: &LabelOrder) -> Result<Self> {
        if spec.trim() == "uniform" {
            return Self::target(labels, &vec![1.0; labels.len()]);
        }
        let mut weights = vec![None; labels.len()];
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("expected label=weight, got {item:?}")))?;
            let k = labels
                .index_of(name.trim())
                .ok_or_else(|| Error::arg(format!("unknown label {name:?}")))?;
            let w: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::arg(format!("bad weight {value:?}")))?;
            if weights[k].replace(w).is_some() {
                return Err(Error::arg(format!("label {name:?} given twice")));
            }
        }
        let weights: Vec<f64> = weights
            .into_iter()
            .enumerate()
            .map(|(k, w)| w.ok_or_else(|| Error::arg(format!("no weight for {:?}", labels.label(k)))))
            .collect::<Result<_>>()?;
        Self::target(labels, &weights)
    }

    pub fn max_abs_error(&self, other: &ClassDistribution) -> f64 {
        self.probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Population mean and standard deviation, computed in two passes.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn type_set(text: &str, tokenizer: Tokenizer) -> HashSet<String> {
    tokenizer
        .tokenize(text)
        .tokens
        .into_iter()
        .map(|t| t.surface.to_lowercase())
        .collect()
}

/// Share of the hypothesis's lowercased token types that also occur in the
/// premise.
pub fn lexical_overlap(premise: &str, hypothesis: &str, tokenizer: Tokenizer) -> Result<f64> {
    let h = type_set(hypothesis, tokenizer);
    if h.is_empty() {
        return Err(Error::arg("hypothesis has no tokens"));
    }
    let p = type_set(premise, tokenizer);
    Ok(h.intersection(&p).count() as f64 / h.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapCell {
    pub label: NliLabel,
    pub provenance: String,
    pub language: String,
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetOverlap {
    pub name: String,
    pub size: usize,
    pub mean: Option<f64>,
    pub per_label: BTreeMap<String, Option<f64>>,
    pub cells: Vec<OverlapCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapDelta {
    pub from: String,
    pub to: String,
    /// `to` minus `from`; absent when either side has no examples.
    pub mean: Option<f64>,
    pub per_label: BTreeMap<String, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub tokenizer: Tokenizer,
    pub datasets: Vec<DatasetOverlap>,
    pub deltas: Vec<OverlapDelta>,
}

fn summarize(name: &str, records: &[NliExample], tokenizer: Tokenizer) -> Result<DatasetOverlap> {
    let scores: Vec<f64> = records
        .par_iter()
        .map(|r| {
            lexical_overlap(&r.premise, &r.hypothesis, tokenizer)
                .map_err(|e| Error::invalid(&r.id, "hypothesis", e.to_string()))
        })
        .collect::<Result<_>>()?;

    let provenances: BTreeSet<&str> = records.iter().map(|r| r.provenance.as_str()).collect();
    let languages: BTreeSet<&str> = records.iter().map(|r| r.language.as_str()).collect();
    let mut cells = Vec::new();
    let mut per_label = BTreeMap::new();
    for label in NliLabel::ALL {
        let in_label: Vec<f64> = records
            .iter()
            .zip(&scores)
            .filter(|(r, _)| r.label == label)
            .map(|(_, &s)| s)
            .collect();
        per_label.insert(label.as_str().to_string(), mean_std(&in_label).map(|m| m.0));
        for &provenance in &provenances {
            for &language in &languages {
                let values: Vec<f64> = records
                    .iter()
                    .zip(&scores)
                    .filter(|(r, _)| {
                        r.label == label
                            && r.provenance.as_str() == provenance
                            && r.language.as_str() == language
                    })
                    .map(|(_, &s)| s)
                    .collect();
                let stats = mean_std(&values);
                cells.push(OverlapCell {
                    label,
                    provenance: provenance.to_string(),
                    language: language.to_string(),
                    count: values.len(),
                    mean: stats.map(|s| s.0),
                    std: stats.map(|s| s.1),
                });
            }
        }
    }
    Ok(DatasetOverlap {
        name: name.to_string(),
        size: records.len(),
        mean: mean_std(&scores).map(|m| m.0),
        per_label,
        cells,
    })
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

/// Overlap aggregates for each named dataset plus deltas between every
/// ordered pair `(earlier, later)` in the given order.
pub fn overlap_report(datasets: &[(String, &[NliExample])], tokenizer: Tokenizer) -> Result<OverlapReport> {
    let summaries = datasets
        .iter()
        .map(|(name, records)| summarize(name, records, tokenizer))
        .collect::<Result<Vec<_>>>()?;
    let mut deltas = Vec::new();
    for (a, from) in summaries.iter().enumerate() {
        for to in &summaries[a + 1..] {
            deltas.push(OverlapDelta {
                from: from.name.clone(),
                to: to.name.clone(),
                mean: diff(from.mean, to.mean),
                per_label: from
                    .per_label
                    .iter()
                    .map(|(label, &m)| (label.clone(), diff(m, to.per_label.get(label).copied().flatten())))
                    .collect(),
            });
        }
    }
    Ok(OverlapReport {
        tokenizer,
        datasets: summaries,
        deltas,
    })
}

/// Distribution of `argmax(logits + bias)` with ties going to the lowest
/// label index. Records without logits are an error.
pub fn class_distribution(
    predictions: &[PredictionRecord],
    labels: &LabelOrder,
    bias: Option<&BiasVector>,
) -> Result<ClassDistribution> {
    if predictions.is_empty() {
        return Err(Error::arg("no predictions"));
    }
    let zero = BiasVector::zeros(labels.len());
    let bias = bias.unwrap_or(&zero);
    if bias.len() != labels.len() {
        return Err(Error::arg(format!(
            "bias has {} entries for {} labels",
            bias.len(),
            labels.len()
        )));
    }
    let mut counts = vec![0usize; labels.len()];
    for record in predictions {
        let logits = record
            .logits()
            .ok_or_else(|| Error::invalid(&record.example_id, "logits", "record has no logits"))?;
        if logits.len() != labels.len() {
            return Err(Error::invalid(&record.example_id, "logits", "arity mismatch"));
        }
        counts[apply_bias_one(logits, bias.values())] += 1;
    }
    ClassDistribution::from_counts(labels, &counts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub system: String,
    pub language: String,
    pub distribution: ClassDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub labels: Vec<String>,
    pub rows: Vec<ClassRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthGroup {
    pub field: String,
    pub label: Option<String>,
    pub provenance: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub p10: usize,
    pub p50: usize,
    pub p90: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub tokenizer: Tokenizer,
    pub groups: Vec<LengthGroup>,
}

/// Nearest-rank percentile of an ascending, non-empty slice.
pub fn nearest_rank(sorted: &[usize], percentile: f64) -> usize {
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Token-length statistics per text field, grouped by label and provenance.
/// Groups are ordered by field, then label, then provenance.
pub fn length_stats(dataset: &Dataset, tokenizer: Tokenizer) -> LengthReport {
    type Key = (String, Option<String>, String);
    let mut lengths: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    let mut add = |field: &str, label: Option<&str>, provenance: &str, text: &str| {
        lengths
            .entry((field.to_string(), label.map(str::to_string), provenance.to_string()))
            .or_default()
            .push(tokenizer.count(text));
    };
    match dataset {
        Dataset::Nli(records) => {
            for r in records {
                add("premise", Some(r.label.as_str()), r.provenance.as_str(), &r.premise);
                add("hypothesis", Some(r.label.as_str()), r.provenance.as_str(), &r.hypothesis);
            }
        }
        Dataset::Qa(records) => {
            for r in records {
                add("context", None, r.provenance.as_str(), &r.context);
                add("question", None, r.provenance.as_str(), &r.question);
            }
        }
    }
    let groups = lengths
        .into_iter()
        .map(|((field, label, provenance), mut values)| {
            let as_f: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let (mean, std) = mean_std(&as_f).expect("groups are never empty");
            values.sort_unstable();
            LengthGroup {
                field,
                label,
                provenance,
                count: values.len(),
                mean,
                std,
                p10: nearest_rank(&values, 10.0),
                p50: nearest_rank(&values, 50.0),
                p90: nearest_rank(&values, 90.0),
                max: *values.last().unwrap(),
            }
        })
        .collect();
    LengthReport { tokenizer, groups }
}
