use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use transart::datamodel::{PredictionRecord, Task};
use transart::eval::{
    aggregate_runs, grouped_accuracy, nli_result_table, qa_evaluate, select_best_checkpoint, NormalizeOptions,
    ResultTable,
};
use transart::report::{CheckpointChoice, GroupedRun, Report};
use transart::{Error, Result};

use super::{emit, labels};
use crate::args::{AggregateArgs, CheckpointArgs, EvalNliArgs, EvalQaArgs};
use crate::run::Run;

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "system".into())
}

pub fn nli(args: &EvalNliArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let order = labels(&args.labels)?;
    let gold = run.dataset(&args.gold, Task::Nli)?;
    let gold = gold.as_nli()?;
    let preds = run.predictions(&args.preds, &order)?;
    let system = args.system.clone().unwrap_or_else(|| stem(&args.preds));
    let table = nli_result_table(&system, &preds, gold, &order, args.per_language)?;
    let mut grouped = Vec::new();
    if let Some(field) = &args.group_by {
        let mut runs: BTreeMap<(u64, Option<u32>), Vec<PredictionRecord>> = BTreeMap::new();
        for p in &preds {
            runs.entry((p.seed, p.epoch)).or_default().push(p.clone());
        }
        for ((seed, epoch), records) in runs {
            grouped.push(GroupedRun {
                seed,
                epoch,
                accuracy: grouped_accuracy(&records, gold, &order, field)?,
            });
        }
    }
    emit(run, &Report::Nli { table, grouped }, args.report.as_deref());
    Ok(args.report.clone())
}

pub fn qa(args: &EvalQaArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let gold = run.dataset(&args.gold, Task::Qa)?;
    // QA predictions carry answers, not logits, so any label order will do.
    let all = run.predictions(&args.preds, &"answer".parse()?)?;
    let preds: Vec<PredictionRecord> = all
        .into_iter()
        .filter(|p| args.seed.map_or(true, |s| p.seed == s) && args.epoch.map_or(true, |e| p.epoch == Some(e)))
        .collect();
    let mut runs: Vec<(u64, Option<u32>)> = preds.iter().map(|p| (p.seed, p.epoch)).collect();
    runs.sort();
    runs.dedup();
    if runs.len() > 1 {
        return Err(Error::arg(format!(
            "{} holds {} runs; select one with --seed/--epoch",
            args.preds.display(),
            runs.len()
        )));
    }
    let opts = NormalizeOptions {
        remove_articles: !args.keep_articles,
        ascii_punctuation: args.ascii_punctuation,
    };
    let summary = qa_evaluate(&preds, gold.as_qa()?, opts)?;
    emit(run, &Report::Qa(summary), args.report.as_deref());
    Ok(args.report.clone())
}

fn load_table(run: &mut Run, path: &Path) -> Result<ResultTable> {
    let text = run.read_text(path)?;
    let parse_err = |e: serde_json::Error| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let table = if value.get("kind").is_some() {
        match serde_json::from_value::<Report>(value).map_err(parse_err)? {
            Report::Nli { table, .. } => table,
            _ => return Err(Error::arg(format!("{} is not an NLI report", path.display()))),
        }
    } else {
        serde_json::from_value::<ResultTable>(value).map_err(parse_err)?
    };
    table.validate()?;
    Ok(table)
}

pub fn aggregate(args: &AggregateArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let tables = args
        .runs
        .iter()
        .map(|p| load_table(run, p))
        .collect::<Result<Vec<_>>>()?;
    let per_seed = ResultTable::merge(tables)?.split_by_seed();
    let (mean, std) = aggregate_runs(&per_seed)?;
    emit(run, &Report::Aggregate { mean, std }, args.report.as_deref());
    Ok(args.report.clone())
}

pub fn checkpoint(args: &CheckpointArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let tables = args
        .runs
        .iter()
        .map(|p| load_table(run, p))
        .collect::<Result<Vec<_>>>()?;
    let merged = ResultTable::merge(tables)?;
    let mut dev: BTreeMap<(String, Option<u64>), BTreeMap<u32, BTreeMap<String, f64>>> = BTreeMap::new();
    for row in merged.rows {
        let epoch = row
            .key
            .epoch
            .ok_or_else(|| Error::arg(format!("row for {} has no epoch", row.key.system)))?;
        dev.entry((row.key.system, row.key.seed))
            .or_default()
            .insert(epoch, row.values);
    }
    let languages = args.languages.as_deref();
    let mut choices = Vec::new();
    for ((system, seed), epochs) in dev {
        let epoch = select_best_checkpoint(&epochs, languages)?;
        let scores = &epochs[&epoch];
        let values: Vec<f64> = match languages {
            Some(langs) => langs.iter().map(|l| scores[l]).collect(),
            None => scores.values().copied().collect(),
        };
        choices.push(CheckpointChoice {
            system,
            seed,
            epoch,
            average: values.iter().sum::<f64>() / values.len() as f64,
        });
    }
    emit(run, &Report::Checkpoints(choices), args.report.as_deref());
    Ok(args.report.clone())
}
