//! Multinomial naive-Bayes language identifier over character 1-3-grams.
//!
//! Text is lowercased and padded with one space on each side before
//! n-gram extraction so that word boundaries become features. Only the
//! most frequent n-grams of the training corpus are retained; unseen
//! n-grams are ignored at classification time.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::datamodel::LanguageTag;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LangIdConfig {
    pub max_order: usize,
    pub vocab_size: usize,
    pub smoothing: f64,
    pub min_texts_per_language: usize,
}

impl Default for LangIdConfig {
    fn default() -> Self {
        LangIdConfig {
            max_order: 3,
            vocab_size: 5000,
            smoothing: 0.1,
            min_texts_per_language: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ModelData {
    languages: Vec<LanguageTag>,
    max_order: usize,
    smoothing: f64,
    vocab: Vec<String>,
    log_prior: Vec<f64>,
    /// `log_probs[lang][gram]`
    log_probs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ModelData", into = "ModelData")]
pub struct LangIdModel {
    data: ModelData,
    index: HashMap<String, usize>,
}

impl TryFrom<ModelData> for LangIdModel {
    type Error = Error;

    fn try_from(data: ModelData) -> Result<Self> {
        let v = data.vocab.len();
        if data.languages.len() < 2
            || data.log_prior.len() != data.languages.len()
            || data.log_probs.len() != data.languages.len()
            || data.log_probs.iter().any(|row| row.len() != v)
        {
            return Err(Error::arg("inconsistent language-identifier tables"));
        }
        let index = data
            .vocab
            .iter()
            .enumerate()
            .map(|(k, g)| (g.clone(), k))
            .collect();
        Ok(LangIdModel { data, index })
    }
}

impl From<LangIdModel> for ModelData {
    fn from(model: LangIdModel) -> ModelData {
        model.data
    }
}

/// Character n-grams of orders `1..=max_order` over the padded,
/// lowercased text, in text order.
pub fn char_ngrams(text: &str, max_order: usize) -> Vec<String> {
    let padded: Vec<char> = std::iter::once(' ')
        .chain(text.chars().flat_map(char::to_lowercase))
        .chain(std::iter::once(' '))
        .collect();
    let mut grams = Vec::new();
    for order in 1..=max_order {
        for window in padded.windows(order) {
            grams.push(window.iter().collect());
        }
    }
    grams
}

pub fn train_langid(
    corpus: &BTreeMap<LanguageTag, Vec<String>>,
    config: &LangIdConfig,
) -> Result<LangIdModel> {
    if corpus.len() < 2 {
        return Err(Error::arg(format!(
            "language identification needs at least 2 languages, got {}",
            corpus.len()
        )));
    }
    if let Some((lang, texts)) = corpus
        .iter()
        .find(|(_, texts)| texts.len() < config.min_texts_per_language)
    {
        return Err(Error::arg(format!(
            "language {lang} has {} training texts, need at least {}",
            texts.len(),
            config.min_texts_per_language
        )));
    }
    if config.max_order == 0 || config.vocab_size == 0 || !(config.smoothing > 0.0) {
        return Err(Error::arg("invalid language-identifier configuration"));
    }

    let per_language: Vec<HashMap<String, u64>> = corpus
        .values()
        .map(|texts| {
            let mut counts = HashMap::new();
            for text in texts {
                for gram in char_ngrams(text, config.max_order) {
                    *counts.entry(gram).or_insert(0u64) += 1;
                }
            }
            counts
        })
        .collect();

    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for counts in &per_language {
        for (gram, &c) in counts {
            *totals.entry(gram.as_str()).or_insert(0) += c;
        }
    }
    let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(config.vocab_size);
    let vocab: Vec<String> = ranked.into_iter().map(|(g, _)| g.to_owned()).collect();

    let alpha = config.smoothing;
    let v = vocab.len() as f64;
    let log_probs = per_language
        .iter()
        .map(|counts| {
            let retained: Vec<f64> = vocab
                .iter()
                .map(|g| counts.get(g).copied().unwrap_or(0) as f64)
                .collect();
            let denom = retained.iter().sum::<f64>() + alpha * v;
            retained.iter().map(|c| ((c + alpha) / denom).ln()).collect()
        })
        .collect();

    let n_texts: usize = corpus.values().map(Vec::len).sum();
    let log_prior = corpus
        .values()
        .map(|texts| (texts.len() as f64 / n_texts as f64).ln())
        .collect();

    LangIdModel::try_from(ModelData {
        languages: corpus.keys().cloned().collect(),
        max_order: config.max_order,
        smoothing: alpha,
        vocab,
        log_prior,
        log_probs,
    })
}

impl LangIdModel {
    pub fn languages(&self) -> &[LanguageTag] {
        &self.data.languages
    }

    pub fn max_order(&self) -> usize {
        self.data.max_order
    }

    pub fn vocab(&self) -> &[String] {
        &self.data.vocab
    }

    pub fn log_prior(&self, lang: usize) -> f64 {
        self.data.log_prior[lang]
    }

    /// `ln P(gram | language)`, or `None` for n-grams outside the vocabulary.
    pub fn log_prob(&self, lang: usize, gram: &str) -> Option<f64> {
        self.index.get(gram).map(|&k| self.data.log_probs[lang][k])
    }

    /// Unnormalized log joint scores per language.
    pub fn log_scores(&self, text: &str) -> Vec<f64> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for gram in char_ngrams(text, self.data.max_order) {
            if let Some(&k) = self.index.get(&gram) {
                *counts.entry(k).or_insert(0.0) += 1.0;
            }
        }
        self.data
            .log_probs
            .iter()
            .zip(&self.data.log_prior)
            .map(|(row, prior)| prior + counts.iter().map(|(&k, &c)| c * row[k]).sum::<f64>())
            .collect()
    }

    /// Normalized posterior over the trained languages.
    pub fn posterior(&self, text: &str) -> Result<Vec<f64>> {
        if text.is_empty() {
            return Err(Error::arg("cannot identify the language of empty text"));
        }
        let scores = self.log_scores(text);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / z).collect())
    }

    /// Most probable language and its posterior probability. Ties go to
    /// the language that sorts first.
    pub fn classify(&self, text: &str) -> Result<(LanguageTag, f64)> {
        let posterior = self.posterior(text)?;
        let mut best = 0;
        for (k, &p) in posterior.iter().enumerate() {
            if p > posterior[best] {
                best = k;
            }
        }
        Ok((self.data.languages[best].clone(), posterior[best]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model tables serialize")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

pub fn classify_language(model: &LangIdModel, text: &str) -> Result<(LanguageTag, f64)> {
    model.classify(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::new(s).unwrap()
    }

    fn toy_corpus() -> BTreeMap<LanguageTag, Vec<String>> {
        let mut corpus = BTreeMap::new();
        corpus.insert(
            tag("aa"),
            (0..100).map(|k| format!("abab ab {} aab", "ab".repeat(k % 5 + 1))).collect(),
        );
        corpus.insert(
            tag("xx"),
            (0..100).map(|k| format!("xyxy yx {} xxy", "xy".repeat(k % 4 + 1))).collect(),
        );
        corpus
    }

    #[test]
    fn ngram_extraction() {
        assert_eq!(char_ngrams("Ab", 2), vec![" ", "a", "b", " ", " a", "ab", "b "]);
        assert_eq!(char_ngrams("ä", 3).len(), 3 + 2 + 1);
    }

    #[test]
    fn rejects_too_few_languages_or_texts() {
        let mut corpus = toy_corpus();
        corpus.remove(&tag("xx"));
        assert!(train_langid(&corpus, &LangIdConfig::default()).is_err());
        let mut corpus = toy_corpus();
        corpus.get_mut(&tag("xx")).unwrap().truncate(99);
        assert!(train_langid(&corpus, &LangIdConfig::default()).is_err());
    }

    #[test]
    fn distributions_are_normalized() {
        let model = train_langid(&toy_corpus(), &LangIdConfig::default()).unwrap();
        for lang in 0..2 {
            let total: f64 = model.vocab().iter().map(|g| model.log_prob(lang, g).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let model = train_langid(&toy_corpus(), &LangIdConfig::default()).unwrap();
        assert!(model.classify("").is_err());
        let (_, conf) = model.classify("q").unwrap();
        assert!((0.0..=1.0).contains(&conf));
        assert_eq!(model.classify("abab ab aab").unwrap().0, tag("aa"));
        assert_eq!(model.classify("xyxy yx xxy").unwrap().0, tag("xx"));
    }

    #[test]
    fn json_round_trip() {
        let model = train_langid(&toy_corpus(), &LangIdConfig::default()).unwrap();
        let back = LangIdModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back.posterior("ab xy").unwrap(), model.posterior("ab xy").unwrap());
    }
}
