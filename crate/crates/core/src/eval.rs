//! NLI and QA metrics, grouped breakdowns, multi-seed aggregation and
//! checkpoint selection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::calibrate::apply_bias_one;
use crate::datamodel::{LabelOrder, NliExample, PredictionRecord, QaExample};
use crate::error::{Error, Result};
use crate::stats::mean_std;
use crate::tokenize::is_punctuation;

/// Maps each prediction to its argmax label, checking that predictions and
/// gold ids match one to one.
pub fn predicted_labels<'a>(
    predictions: &'a [PredictionRecord],
    gold_ids: impl IntoIterator<Item = &'a str>,
    labels: &LabelOrder,
) -> Result<HashMap<&'a str, usize>> {
    let zero = vec![0.0; labels.len()];
    let mut by_id = HashMap::with_capacity(predictions.len());
    for p in predictions {
        let z = p
            .logits()
            .ok_or_else(|| Error::invalid(&p.example_id, "logits", "record has no logits"))?;
        if z.len() != labels.len() {
            return Err(Error::invalid(&p.example_id, "logits", "arity mismatch"));
        }
        if by_id.insert(p.example_id.as_str(), apply_bias_one(z, &zero)).is_some() {
            return Err(Error::invalid(&p.example_id, "example_id", "more than one prediction"));
        }
    }
    let mut seen = 0;
    for id in gold_ids {
        if !by_id.contains_key(id) {
            return Err(Error::invalid(id, "example_id", "no prediction for gold example"));
        }
        seen += 1;
    }
    if seen != by_id.len() {
        return Err(Error::arg(format!(
            "{} predictions do not belong to any gold example",
            by_id.len() - seen
        )));
    }
    Ok(by_id)
}

fn nli_correct(predictions: &[PredictionRecord], gold: &[NliExample], labels: &LabelOrder) -> Result<Vec<bool>> {
    let predicted = predicted_labels(predictions, gold.iter().map(|g| g.id.as_str()), labels)?;
    Ok(gold
        .iter()
        .map(|g| labels.label(predicted[g.id.as_str()]) == g.label.as_str())
        .collect())
}

/// Fraction of gold examples whose argmax prediction equals the gold label.
pub fn nli_accuracy(predictions: &[PredictionRecord], gold: &[NliExample], labels: &LabelOrder) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::arg("empty gold set"));
    }
    let correct = nli_correct(predictions, gold, labels)?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / gold.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl GroupScore {
    fn new(correct: usize, total: usize) -> Self {
        GroupScore {
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupedAccuracy {
    pub field: String,
    pub groups: BTreeMap<String, GroupScore>,
    pub pooled: GroupScore,
}

/// Accuracy per distinct value of `group_field` on the gold records.
pub fn grouped_accuracy(
    predictions: &[PredictionRecord],
    gold: &[NliExample],
    labels: &LabelOrder,
    group_field: &str,
) -> Result<GroupedAccuracy> {
    if gold.is_empty() {
        return Err(Error::arg("empty gold set"));
    }
    let keys: Vec<String> = gold
        .iter()
        .map(|g| {
            g.field(group_field)
                .ok_or_else(|| Error::invalid(&g.id, "group", format!("no field {group_field:?}")))
        })
        .collect::<Result<_>>()?;
    let correct = nli_correct(predictions, gold, labels)?;
    let mut tallies: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (key, ok) in keys.into_iter().zip(&correct) {
        let t = tallies.entry(key).or_default();
        t.0 += usize::from(*ok);
        t.1 += 1;
    }
    let right = correct.iter().filter(|&&c| c).count();
    Ok(GroupedAccuracy {
        field: group_field.to_string(),
        groups: tallies
            .into_iter()
            .map(|(k, (c, t))| (k, GroupScore::new(c, t)))
            .collect(),
        pooled: GroupScore::new(right, gold.len()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    /// Drop the English articles `a`, `an`, `the`, whatever the language.
    pub remove_articles: bool,
    /// Strip only ASCII punctuation instead of all Unicode punctuation.
    pub ascii_punctuation: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            remove_articles: true,
            ascii_punctuation: false,
        }
    }
}

fn articles() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(a|an|the)\b").unwrap())
}

/// Lowercase, strip punctuation, drop articles, collapse whitespace.
pub fn normalize_answer(text: &str, opts: NormalizeOptions) -> String {
    let lower = text.to_lowercase();
    let no_punct: String = lower
        .chars()
        .filter(|&c| {
            if opts.ascii_punctuation {
                !c.is_ascii_punctuation()
            } else {
                !is_punctuation(c)
            }
        })
        .collect();
    let no_articles = if opts.remove_articles {
        articles().replace_all(&no_punct, " ").into_owned()
    } else {
        no_punct
    };
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn token_f1(pred: &str, gold: &str) -> f64 {
    let p: Vec<&str> = pred.split_whitespace().collect();
    let g: Vec<&str> = gold.split_whitespace().collect();
    if p.is_empty() || g.is_empty() {
        return f64::from(u8::from(p.is_empty() && g.is_empty()));
    }
    let mut bag: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *bag.entry(t).or_default() += 1;
    }
    let mut same = 0usize;
    for t in &p {
        if let Some(n) = bag.get_mut(t) {
            if *n > 0 {
                *n -= 1;
                same += 1;
            }
        }
    }
    if same == 0 {
        return 0.0;
    }
    let precision = same as f64 / p.len() as f64;
    let recall = same as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// `(F1, EM)` of a predicted answer against the best-matching gold answer.
pub fn qa_scores(predicted: &str, golds: &[&str], opts: NormalizeOptions) -> Result<(f64, f64)> {
    if golds.is_empty() {
        return Err(Error::arg("no gold answers"));
    }
    let pred = normalize_answer(predicted, opts);
    let mut best = (0.0f64, 0.0f64);
    for gold in golds {
        let gold = normalize_answer(gold, opts);
        best.0 = best.0.max(token_f1(&pred, &gold));
        best.1 = best.1.max(f64::from(u8::from(pred == gold)));
    }
    Ok(best)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QaSummary {
    pub count: usize,
    pub f1: f64,
    pub exact_match: f64,
    /// Examples whose gold answers include an untranslated fallback.
    pub fallback_count: usize,
    pub fallback_f1: Option<f64>,
    pub fallback_exact_match: Option<f64>,
}

/// Mean F1 and EM over a QA gold set; predictions must match gold ids one to
/// one.
pub fn qa_evaluate(predictions: &[PredictionRecord], gold: &[QaExample], opts: NormalizeOptions) -> Result<QaSummary> {
    if gold.is_empty() {
        return Err(Error::arg("empty gold set"));
    }
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    for p in predictions {
        let answer = p
            .answer()
            .ok_or_else(|| Error::invalid(&p.example_id, "answer", "record has no answer"))?;
        if by_id.insert(&p.example_id, &answer.text).is_some() {
            return Err(Error::invalid(&p.example_id, "example_id", "more than one prediction"));
        }
    }
    if by_id.len() != gold.len() {
        if let Some(g) = gold.iter().find(|g| !by_id.contains_key(g.id.as_str())) {
            return Err(Error::invalid(&g.id, "example_id", "no prediction for gold example"));
        }
        return Err(Error::arg("predictions do not match the gold ids"));
    }
    let mut all = (0.0, 0.0);
    let mut fallback = (0.0, 0.0, 0usize);
    for g in gold {
        let pred = by_id
            .get(g.id.as_str())
            .ok_or_else(|| Error::invalid(&g.id, "example_id", "no prediction for gold example"))?;
        let golds: Vec<&str> = g.answers.iter().map(|a| a.text.as_str()).collect();
        let (f1, em) = qa_scores(pred, &golds, opts)?;
        all.0 += f1;
        all.1 += em;
        if g.answers.iter().any(|a| a.fallback) {
            fallback.0 += f1;
            fallback.1 += em;
            fallback.2 += 1;
        }
    }
    let n = gold.len() as f64;
    let fb = fallback.2 as f64;
    Ok(QaSummary {
        count: gold.len(),
        f1: all.0 / n,
        exact_match: all.1 / n,
        fallback_count: fallback.2,
        fallback_f1: (fallback.2 > 0).then(|| fallback.0 / fb),
        fallback_exact_match: (fallback.2 > 0).then(|| fallback.1 / fb),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub system: String,
    pub seed: Option<u64>,
    pub epoch: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(flatten)]
    pub key: RowKey,
    pub values: BTreeMap<String, f64>,
}

/// Metric rows keyed by system, seed and epoch; columns are languages or
/// groups.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: RowKey, values: BTreeMap<String, f64>) -> Result<()> {
        if self.rows.iter().any(|r| r.key == key) {
            return Err(Error::arg(format!("duplicate result row {key:?}")));
        }
        if let Some((column, _)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite value in column {column:?}")));
        }
        self.rows.push(ResultRow { key, values });
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut copy = ResultTable::new();
        for row in &self.rows {
            copy.push(row.key.clone(), row.values.clone())?;
        }
        Ok(())
    }

    pub fn columns(&self) -> BTreeSet<&str> {
        self.rows
            .iter()
            .flat_map(|r| r.values.keys().map(String::as_str))
            .collect()
    }

    pub fn get(&self, key: &RowKey) -> Option<&ResultRow> {
        self.rows.iter().find(|r| &r.key == key)
    }

    /// Splits rows into one table per seed, in ascending seed order.
    pub fn split_by_seed(&self) -> Vec<ResultTable> {
        let mut by_seed: BTreeMap<Option<u64>, ResultTable> = BTreeMap::new();
        for row in &self.rows {
            by_seed.entry(row.key.seed).or_default().rows.push(row.clone());
        }
        by_seed.into_values().collect()
    }

    pub fn merge(tables: impl IntoIterator<Item = ResultTable>) -> Result<ResultTable> {
        let mut out = ResultTable::new();
        for t in tables {
            for row in t.rows {
                out.push(row.key, row.values)?;
            }
        }
        Ok(out)
    }
}

fn structure(table: &ResultTable) -> BTreeMap<(String, Option<u32>), BTreeSet<String>> {
    table
        .rows
        .iter()
        .map(|r| {
            (
                (r.key.system.clone(), r.key.epoch),
                r.values.keys().cloned().collect(),
            )
        })
        .collect()
}

fn order_free_mean_std(values: &mut [f64]) -> (f64, f64) {
    // Sorting first makes the floating-point sums independent of seed order.
    values.sort_by(f64::total_cmp);
    mean_std(values).expect("at least one table")
}

/// Element-wise mean and population standard deviation over one table per
/// seed. Rows are matched by system and epoch; result rows carry no seed.
pub fn aggregate_runs(tables: &[ResultTable]) -> Result<(ResultTable, ResultTable)> {
    let first = tables.first().ok_or_else(|| Error::arg("no result tables"))?;
    let shape = structure(first);
    if shape.len() != first.rows.len() {
        return Err(Error::arg("a table repeats a system/epoch row"));
    }
    for (k, t) in tables.iter().enumerate().skip(1) {
        if structure(t) != shape || t.rows.len() != first.rows.len() {
            return Err(Error::arg(format!("table {k} differs in rows or columns from table 0")));
        }
    }
    let mut mean = ResultTable::new();
    let mut std = ResultTable::new();
    for ((system, epoch), columns) in &shape {
        let mut m = BTreeMap::new();
        let mut s = BTreeMap::new();
        for column in columns {
            let mut values: Vec<f64> = tables
                .iter()
                .map(|t| {
                    t.rows
                        .iter()
                        .find(|r| &r.key.system == system && r.key.epoch == *epoch)
                        .map(|r| r.values[column])
                        .expect("structure checked")
                })
                .collect();
            let (mu, sd) = order_free_mean_std(&mut values);
            m.insert(column.clone(), mu);
            s.insert(column.clone(), sd);
        }
        let key = RowKey {
            system: system.clone(),
            seed: None,
            epoch: *epoch,
        };
        mean.push(key.clone(), m)?;
        std.push(key, s)?;
    }
    Ok((mean, std))
}

/// Epoch whose unweighted average over `languages` (all columns when `None`)
/// is highest; ties go to the earliest epoch.
pub fn select_best_checkpoint(
    dev: &BTreeMap<u32, BTreeMap<String, f64>>,
    languages: Option<&[String]>,
) -> Result<u32> {
    let mut best: Option<(u32, f64)> = None;
    for (&epoch, scores) in dev {
        let values: Vec<f64> = match languages {
            Some(langs) => langs
                .iter()
                .map(|l| {
                    scores
                        .get(l)
                        .copied()
                        .ok_or_else(|| Error::arg(format!("epoch {epoch} has no score for {l:?}")))
                })
                .collect::<Result<_>>()?,
            None => scores.values().copied().collect(),
        };
        if values.is_empty() {
            return Err(Error::arg(format!("epoch {epoch} has no scores")));
        }
        let avg = values.iter().sum::<f64>() / values.len() as f64;
        if best.map_or(true, |(_, b)| avg > b) {
            best = Some((epoch, avg));
        }
    }
    best.map(|(e, _)| e).ok_or_else(|| Error::arg("no epochs"))
}

/// Accuracy rows for one system: one row per (seed, epoch) found in the
/// predictions, with a column per gold language, or a single `all` column.
pub fn nli_result_table(
    system: &str,
    predictions: &[PredictionRecord],
    gold: &[NliExample],
    labels: &LabelOrder,
    per_language: bool,
) -> Result<ResultTable> {
    let mut runs: BTreeMap<(u64, Option<u32>), Vec<PredictionRecord>> = BTreeMap::new();
    for p in predictions {
        runs.entry((p.seed, p.epoch)).or_default().push(p.clone());
    }
    if runs.is_empty() {
        return Err(Error::arg("no predictions"));
    }
    let mut table = ResultTable::new();
    for ((seed, epoch), preds) in runs {
        let values = if per_language {
            let grouped = grouped_accuracy(&preds, gold, labels, "language")?;
            grouped
                .groups
                .into_iter()
                .map(|(lang, s)| (lang, s.accuracy))
                .collect()
        } else {
            BTreeMap::from([("all".to_string(), nli_accuracy(&preds, gold, labels)?)])
        };
        table.push(
            RowKey {
                system: system.to_string(),
                seed: Some(seed),
                epoch,
            },
            values,
        )?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{LanguageTag, NliLabel, PredictionOutput, Provenance};
    use proptest::prelude::*;
    use serde_json::Value;

    fn gold(n: usize) -> Vec<NliExample> {
        (0..n)
            .map(|k| NliExample {
                id: format!("g{k}"),
                premise: "p".into(),
                hypothesis: "h".into(),
                label: NliLabel::ALL[k % 3],
                language: LanguageTag::new(if k % 2 == 0 { "en" } else { "fi" }).unwrap(),
                provenance: Provenance::Original,
                genre: None,
                extra: BTreeMap::from([("category".to_string(), Value::from(format!("c{}", k % 4)))]),
            })
            .collect()
    }

    fn pred_for(id: &str, class: usize, seed: u64) -> PredictionRecord {
        let mut z = vec![0.0; 3];
        z[class] = 1.0;
        PredictionRecord {
            example_id: id.into(),
            seed,
            epoch: None,
            output: PredictionOutput::Logits(z),
        }
    }

    fn perfect(g: &[NliExample]) -> Vec<PredictionRecord> {
        g.iter()
            .enumerate()
            .map(|(k, e)| pred_for(&e.id, k % 3, 0))
            .collect()
    }

    #[test]
    fn accuracy_cases() {
        let labels = LabelOrder::nli();
        let g = gold(3);
        assert_eq!(nli_accuracy(&perfect(&g), &g, &labels).unwrap(), 1.0);
        let wrong: Vec<_> = g.iter().enumerate().map(|(k, e)| pred_for(&e.id, (k + 1) % 3, 0)).collect();
        assert_eq!(nli_accuracy(&wrong, &g, &labels).unwrap(), 0.0);
        let mut two = perfect(&g);
        two[2] = pred_for("g2", 0, 0);
        assert!((nli_accuracy(&two, &g, &labels).unwrap() - 2.0 / 3.0).abs() < 1e-9);

        let mut extra = perfect(&g);
        extra.push(pred_for("zz", 0, 0));
        assert!(nli_accuracy(&extra, &g, &labels).is_err());
        assert!(nli_accuracy(&perfect(&g)[..2], &g, &labels).is_err());
        let mut dup = perfect(&g);
        dup[1].example_id = "g0".into();
        assert!(nli_accuracy(&dup, &g, &labels).is_err());
    }

    #[test]
    fn grouped_cases() {
        let labels = LabelOrder::nli();
        let g = gold(8);
        let mut preds = perfect(&g);
        for (k, p) in preds.iter_mut().enumerate() {
            if g[k].language.as_str() == "fi" {
                *p = pred_for(&g[k].id, (k + 1) % 3, 0);
            }
        }
        let by_lang = grouped_accuracy(&preds, &g, &labels, "language").unwrap();
        assert_eq!(by_lang.groups["en"].accuracy, 1.0);
        assert_eq!(by_lang.groups["fi"].accuracy, 0.0);
        assert_eq!(by_lang.pooled.accuracy, 0.5);

        let one = grouped_accuracy(&preds, &g, &labels, "provenance").unwrap();
        assert_eq!(one.groups.len(), 1);
        assert_eq!(one.groups["original"].accuracy, nli_accuracy(&preds, &g, &labels).unwrap());
        assert!(grouped_accuracy(&preds, &g, &labels, "missing").is_err());
        assert_eq!(grouped_accuracy(&preds, &g, &labels, "category").unwrap().groups.len(), 4);
    }

    #[test]
    fn qa_cases() {
        let o = NormalizeOptions::default();
        assert_eq!(qa_scores("The Cat", &["cat"], o).unwrap(), (1.0, 1.0));
        let (f1, em) = qa_scores("black cat", &["cat sat"], o).unwrap();
        assert!((f1 - 0.5).abs() < 1e-9 && em == 0.0);
        assert_eq!(qa_scores("Paris, France", &["Paris, France"], o).unwrap(), (1.0, 1.0));
        assert_eq!(qa_scores("the", &["a"], o).unwrap(), (1.0, 1.0));
        assert_eq!(qa_scores("the", &["cat"], o).unwrap(), (0.0, 0.0));
        assert_eq!(qa_scores("x", &["y", "x z"], o).unwrap().1, 0.0);
        assert!((qa_scores("x", &["y", "x z"], o).unwrap().0 - 2.0 / 3.0).abs() < 1e-12);
        assert!(qa_scores("x", &[], o).is_err());
        let keep = NormalizeOptions {
            remove_articles: false,
            ..o
        };
        assert_eq!(qa_scores("The Cat", &["cat"], keep).unwrap().1, 0.0);
    }

    #[test]
    fn normalization() {
        let o = NormalizeOptions::default();
        assert_eq!(normalize_answer("  The  Ääni! «x» ", o), "ääni x");
        let ascii = NormalizeOptions {
            ascii_punctuation: true,
            ..o
        };
        assert_eq!(normalize_answer("«x»!", ascii), "«x»");
        assert_eq!(normalize_answer("theatre an-a", o), "theatre ana");
    }

    #[test]
    fn aggregate_cases() {
        let row = |seed, v: f64| {
            let mut t = ResultTable::new();
            t.push(
                RowKey {
                    system: "orig".into(),
                    seed: Some(seed),
                    epoch: None,
                },
                BTreeMap::from([("en".to_string(), v)]),
            )
            .unwrap();
            t
        };
        let (m, s) = aggregate_runs(&[row(0, 0.7)]).unwrap();
        assert_eq!(m.rows[0].values["en"], 0.7);
        assert_eq!(s.rows[0].values["en"], 0.0);
        let (m, s) = aggregate_runs(&[row(0, 1.0), row(1, 3.0)]).unwrap();
        assert_eq!((m.rows[0].values["en"], s.rows[0].values["en"]), (2.0, 1.0));
        assert_eq!(m.rows[0].key.seed, None);

        let mut other = row(2, 1.0);
        other.rows[0].values.insert("fi".into(), 0.5);
        assert!(aggregate_runs(&[row(0, 1.0), other]).is_err());
        assert!(aggregate_runs(&[]).is_err());

        let mut t = row(0, 1.0);
        assert!(t.push(t.rows[0].key.clone(), BTreeMap::new()).is_err());
        let key = RowKey {
            system: "x".into(),
            seed: None,
            epoch: None,
        };
        assert!(t.push(key, BTreeMap::from([("en".into(), f64::NAN)])).is_err());
    }

    #[test]
    fn checkpoint_cases() {
        let dev = |avgs: &[f64]| -> BTreeMap<u32, BTreeMap<String, f64>> {
            avgs.iter()
                .enumerate()
                .map(|(e, &a)| (e as u32 + 1, BTreeMap::from([("en".into(), a), ("fi".into(), a)])))
                .collect()
        };
        assert_eq!(select_best_checkpoint(&dev(&[0.5]), None).unwrap(), 1);
        assert_eq!(select_best_checkpoint(&dev(&[0.70, 0.75, 0.73]), None).unwrap(), 2);
        assert_eq!(
            select_best_checkpoint(&dev(&[0.1, 0.2, 0.9, 0.3, 0.4, 0.5, 0.9]), None).unwrap(),
            3
        );
        assert!(select_best_checkpoint(&BTreeMap::new(), None).is_err());
        let mut skewed = dev(&[0.5, 0.5]);
        skewed.get_mut(&2).unwrap().insert("en".into(), 0.9);
        skewed.get_mut(&2).unwrap().insert("fi".into(), 0.0);
        assert_eq!(select_best_checkpoint(&skewed, None).unwrap(), 1);
        assert_eq!(select_best_checkpoint(&skewed, Some(&["en".into()])).unwrap(), 2);
        assert!(select_best_checkpoint(&skewed, Some(&["de".into()])).is_err());
    }

    #[test]
    fn result_table_from_predictions() {
        let labels = LabelOrder::nli();
        let g = gold(6);
        let mut preds = perfect(&g);
        preds.extend(g.iter().map(|e| pred_for(&e.id, 0, 1)));
        let t = nli_result_table("orig", &preds, &g, &labels, true).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].values["en"], 1.0);
        assert_eq!(t.split_by_seed().len(), 2);
        let (m, _) = aggregate_runs(&t.split_by_seed()).unwrap();
        assert_eq!(m.rows.len(), 1);
    }

    proptest! {
        #[test]
        fn em_never_exceeds_f1(p in "[ a-cA-C.,!]{0,12}", g in "[ a-cA-C.,!]{0,12}") {
            let (f1, em) = qa_scores(&p, &[&g], NormalizeOptions::default()).unwrap();
            prop_assert!(em <= f1);
            prop_assert!((0.0..=1.0).contains(&f1));
        }

        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,30}", articles in any::<bool>(), ascii in any::<bool>()) {
            let o = NormalizeOptions { remove_articles: articles, ascii_punctuation: ascii };
            let once = normalize_answer(&s, o);
            prop_assert_eq!(normalize_answer(&once, o), once);
        }

        #[test]
        fn groups_recompose_pooled(classes in prop::collection::vec(0usize..3, 1..40)) {
            let labels = LabelOrder::nli();
            let g = gold(classes.len());
            let preds: Vec<_> = g.iter().zip(&classes).map(|(e, &c)| pred_for(&e.id, c, 0)).collect();
            let grouped = grouped_accuracy(&preds, &g, &labels, "category").unwrap();
            let recomposed: usize = grouped.groups.values().map(|s| s.correct).sum();
            let weighted: f64 = grouped.groups.values().map(|s| s.accuracy * s.total as f64).sum::<f64>()
                / g.len() as f64;
            prop_assert_eq!(recomposed, grouped.pooled.correct);
            prop_assert!((weighted - nli_accuracy(&preds, &g, &labels).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn aggregate_ignores_seed_order(values in prop::collection::vec(0.0f64..1.0, 1..6), rot in 0usize..6) {
            let tables: Vec<ResultTable> = values.iter().enumerate().map(|(k, &v)| {
                let mut t = ResultTable::new();
                t.push(RowKey { system: "s".into(), seed: Some(k as u64), epoch: Some(1) },
                       BTreeMap::from([("en".into(), v)])).unwrap();
                t
            }).collect();
            let mut rotated = tables.clone();
            rotated.rotate_left(rot % tables.len());
            prop_assert_eq!(aggregate_runs(&tables).unwrap(), aggregate_runs(&rotated).unwrap());
        }
    }
}
