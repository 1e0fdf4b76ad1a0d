use std::io::Cursor;
use std::path::PathBuf;

use transart::datamodel::{parse_pharaoh, Dataset, Provenance, Task};
use transart::report::Report;
use transart::spans::map_dataset;
use transart::variant::TranslatedQa;
use transart::{Error, Result};

use super::{emit, jsonl, read_translated};
use crate::args::MapSpansArgs;
use crate::run::Run;

fn is_jsonl(path: &std::path::Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"))
}

pub fn run(args: &MapSpansArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let dataset = run.dataset(&args.input, Task::Qa)?;
    let records = dataset.as_qa()?;
    let translated: Vec<TranslatedQa> = if is_jsonl(&args.translated) {
        read_translated(run, &args.translated)?
    } else {
        let language = args
            .tgt_lang
            .clone()
            .ok_or_else(|| Error::arg("plain-text --translated needs --tgt-lang"))?;
        let text = run.read_text(&args.translated)?;
        let contexts: Vec<&str> = text.lines().collect();
        if contexts.len() != records.len() {
            return Err(Error::arg(format!(
                "{} translated contexts for {} records",
                contexts.len(),
                records.len()
            )));
        }
        records
            .iter()
            .zip(contexts)
            .map(|(r, c)| TranslatedQa {
                id: r.id.clone(),
                context: c.to_owned(),
                question: r.question.clone(),
                language: language.clone(),
                provenance: Provenance::MachineTranslated,
            })
            .collect()
    };
    if translated.len() != records.len() {
        return Err(Error::arg(format!(
            "{} translated records for {} records",
            translated.len(),
            records.len()
        )));
    }
    let lengths: Vec<(usize, usize)> = records
        .iter()
        .zip(&translated)
        .map(|(r, t)| (args.tokenizer.count(&r.context), args.tokenizer.count(&t.context)))
        .collect();
    let bytes = run.read(&args.alignments)?;
    let alignments = parse_pharaoh(Cursor::new(bytes), &lengths)?;
    let (mapped, report) = map_dataset(records, &translated, &alignments, args.mode, args.tokenizer)?;
    Dataset::Qa(mapped.clone()).validate()?;
    run.write(&args.output, jsonl(&mapped));
    emit(run, &Report::SpanMap(report), args.report.as_deref());
    Ok(Some(args.output.clone()))
}
