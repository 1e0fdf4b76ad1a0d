use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::io::{jsonl_lines, open, parse_line};
use super::NliLabel;
use crate::error::{Error, Result};

/// The class order that indexes every logits vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOrder(Vec<String>);

impl LabelOrder {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::arg("label order is empty"));
        }
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::arg("label order has repeated labels"));
        }
        Ok(LabelOrder(labels))
    }

    /// entailment, neutral, contradiction.
    pub fn nli() -> Self {
        LabelOrder(NliLabel::ALL.iter().map(|l| l.as_str().to_owned()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0[index]
    }
}

impl FromStr for LabelOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LabelOrder::new(s.split(',').map(|l| l.trim().to_owned()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedAnswer {
    pub text: String,
    pub char_start: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PredictionOutput {
    Logits(Vec<f64>),
    Answer(PredictedAnswer),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRecord {
    pub example_id: String,
    pub seed: u64,
    pub epoch: Option<u32>,
    pub output: PredictionOutput,
}

impl PredictionRecord {
    pub fn logits(&self) -> Option<&[f64]> {
        match &self.output {
            PredictionOutput::Logits(z) => Some(z),
            PredictionOutput::Answer(_) => None,
        }
    }

    pub fn answer(&self) -> Option<&PredictedAnswer> {
        match &self.output {
            PredictionOutput::Answer(a) => Some(a),
            PredictionOutput::Logits(_) => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawPrediction {
    example_id: String,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epoch: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logits: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer: Option<PredictedAnswer>,
}

/// Parses a prediction file. Logits must be finite and match the label
/// count. A record is identified by `(example_id, seed, epoch)`.
pub fn parse_predictions<R: BufRead>(reader: R, labels: &LabelOrder) -> Result<Vec<PredictionRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in jsonl_lines(reader) {
        let (line_no, text) = line?;
        let raw: RawPrediction = parse_line(line_no, &text)?;
        let invalid = |message: String| Error::Parse {
            line: line_no,
            message: format!("prediction for {}: {message}", raw.example_id),
        };
        let output = match (raw.logits, raw.answer) {
            (Some(z), None) => {
                if z.len() != labels.len() {
                    return Err(invalid(format!(
                        "{} logits for {} labels",
                        z.len(),
                        labels.len()
                    )));
                }
                if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
                    return Err(invalid(format!("non-finite logit {bad}")));
                }
                PredictionOutput::Logits(z)
            }
            (None, Some(a)) => {
                if !a.score.is_finite() {
                    return Err(invalid("non-finite answer score".into()));
                }
                PredictionOutput::Answer(a)
            }
            (Some(_), Some(_)) => return Err(invalid("both logits and answer".into())),
            (None, None) => return Err(invalid("neither logits nor answer".into())),
        };
        if !seen.insert((raw.example_id.clone(), raw.seed, raw.epoch)) {
            return Err(invalid(format!("duplicate record for seed {}", raw.seed)));
        }
        out.push(PredictionRecord {
            example_id: raw.example_id,
            seed: raw.seed,
            epoch: raw.epoch,
            output,
        });
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>, labels: &LabelOrder) -> Result<Vec<PredictionRecord>> {
    parse_predictions(open(path.as_ref())?, labels)
}

pub fn write_predictions_to<W: Write>(records: &[PredictionRecord], mut writer: W) -> Result<()> {
    (|| -> std::io::Result<()> {
        for record in records {
            let (logits, answer) = match &record.output {
                PredictionOutput::Logits(z) => (Some(z.clone()), None),
                PredictionOutput::Answer(a) => (None, Some(a.clone())),
            };
            let raw = RawPrediction {
                example_id: record.example_id.clone(),
                seed: record.seed,
                epoch: record.epoch,
                logits,
                answer,
            };
            serde_json::to_writer(&mut writer, &raw)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()
    })()
    .map_err(|e| Error::io("<output>", e))
}
