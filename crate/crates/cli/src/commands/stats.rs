use std::path::{Path, PathBuf};

use transart::calibrate::BiasVector;
use transart::datamodel::{NliExample, Task};
use transart::report::Report;
use transart::stats::{class_distribution, length_stats, overlap_report, ClassReport, ClassRow};
use transart::{Error, Result};

use super::{emit, labels};
use crate::args::{ClassesArgs, LengthsArgs, OverlapArgs};
use crate::run::Run;

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn overlap(args: &OverlapArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let mut named: Vec<(String, Vec<NliExample>)> = Vec::new();
    for item in &args.datasets {
        let (name, path) = match item.split_once('=') {
            Some((n, p)) => (n.to_owned(), PathBuf::from(p)),
            None => (stem(Path::new(item)), PathBuf::from(item)),
        };
        let records = run.dataset(&path, Task::Nli)?.as_nli()?.to_vec();
        named.push((name, records));
    }
    let borrowed: Vec<(String, &[NliExample])> = named.iter().map(|(n, r)| (n.clone(), &r[..])).collect();
    let report = overlap_report(&borrowed, args.tokenizer)?;
    emit(run, &Report::Overlap(report), args.report.as_deref());
    Ok(args.report.clone())
}

fn parse_preds_spec(item: &str) -> Result<(String, String, PathBuf)> {
    let bad = || Error::arg(format!("--preds {item:?} must be SYSTEM:LANG=PATH"));
    let (head, path) = item.split_once('=').ok_or_else(bad)?;
    let (system, lang) = head.split_once(':').ok_or_else(bad)?;
    if system.is_empty() || lang.is_empty() || path.is_empty() {
        return Err(bad());
    }
    Ok((system.to_owned(), lang.to_owned(), PathBuf::from(path)))
}

pub fn parse_bias(spec: &str) -> Result<BiasVector> {
    let values = spec
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::arg(format!("bias value {v:?} is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    BiasVector::new(values)
}

pub fn classes(args: &ClassesArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let order = labels(&args.labels)?;
    let bias = args.bias.as_deref().map(parse_bias).transpose()?;
    if let Some(b) = &bias {
        if b.len() != order.len() {
            return Err(Error::arg(format!("{} bias values for {} labels", b.len(), order.len())));
        }
    }
    let mut rows = Vec::new();
    for item in &args.preds {
        let (system, language, path) = parse_preds_spec(item)?;
        let preds = run.predictions(&path, &order)?;
        rows.push(ClassRow {
            system,
            language,
            distribution: class_distribution(&preds, &order, bias.as_ref())?,
        });
    }
    let report = ClassReport {
        labels: order.labels().to_vec(),
        rows,
    };
    emit(run, &Report::Classes(report), args.report.as_deref());
    Ok(args.report.clone())
}

pub fn lengths(args: &LengthsArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let dataset = run.dataset(&args.input, args.task)?;
    let report = length_stats(&dataset, args.tokenizer);
    emit(run, &Report::Lengths(report), args.report.as_deref());
    Ok(args.report.clone())
}
