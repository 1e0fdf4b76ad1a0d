mod align;
mod calibrate;
mod eval;
mod filter;
mod spans;
mod stats;
mod variant;

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use transart::datamodel::{BitextPair, LabelOrder, QaExample, Task};
use transart::report::{render, Report};
use transart::tokenize::Tokenizer;
use transart::variant::TranslatedQa;
use transart::{Error, Result};

use crate::args::{
    AlignCommand, BitextArgs, Command, EvalCommand, ReportArgs, StatsCommand, VariantCommand,
};
use crate::run::Run;

pub fn execute(command: &Command, run: &mut Run) -> Result<Option<std::path::PathBuf>> {
    match command {
        Command::Filter(a) => filter::run(a, run),
        Command::Variant(VariantCommand::Build(a)) => variant::build(a, run),
        Command::Variant(VariantCommand::Selfcheck(a)) => variant::selfcheck(a, run),
        Command::Align(AlignCommand::Train(a)) => align::train(a, run),
        Command::Align(AlignCommand::Viterbi(a)) => align::viterbi(a, run),
        Command::MapSpans(a) => spans::run(a, run),
        Command::Stats(StatsCommand::Overlap(a)) => stats::overlap(a, run),
        Command::Stats(StatsCommand::Classes(a)) => stats::classes(a, run),
        Command::Stats(StatsCommand::Lengths(a)) => stats::lengths(a, run),
        Command::Calibrate(a) => calibrate::run(a, run),
        Command::Eval(EvalCommand::Nli(a)) => eval::nli(a, run),
        Command::Eval(EvalCommand::Qa(a)) => eval::qa(a, run),
        Command::Eval(EvalCommand::Aggregate(a)) => eval::aggregate(a, run),
        Command::Eval(EvalCommand::Checkpoint(a)) => eval::checkpoint(a, run),
        Command::Report(a) => report(a, run),
    }
}

/// Prints the text rendering and stages the JSON form at `path`.
fn emit(run: &mut Run, report: &Report, path: Option<&Path>) {
    print!("{}", render(report));
    let _ = std::io::stdout().flush();
    if let Some(path) = path {
        run.write_json(path, report);
    }
}

fn jsonl<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("record serializes");
        out.push(b'\n');
    }
    out
}

fn lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

fn labels(spec: &str) -> Result<LabelOrder> {
    spec.parse()
}

pub(crate) fn read_bitext(run: &mut Run, src: &Path, tgt: &Path, tokenizer: Tokenizer) -> Result<Vec<BitextPair>> {
    let sources = run.read_text(src)?;
    let targets = run.read_text(tgt)?;
    let (s, t) = (lines(&sources), lines(&targets));
    if s.len() != t.len() {
        return Err(Error::arg(format!(
            "{} has {} lines but {} has {}",
            src.display(),
            s.len(),
            tgt.display(),
            t.len()
        )));
    }
    Ok(s.into_iter()
        .zip(t)
        .map(|(a, b)| BitextPair::new(a, b, tokenizer))
        .collect())
}

pub(crate) fn read_bitext_tsv(run: &mut Run, path: &Path, tokenizer: Tokenizer) -> Result<Vec<BitextPair>> {
    let text = run.read_text(path)?;
    lines(&text)
        .into_iter()
        .enumerate()
        .map(|(idx, line)| {
            let (s, t) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("{}: expected source<TAB>target", path.display()),
            })?;
            Ok(BitextPair::new(s, t, tokenizer))
        })
        .collect()
}

pub(crate) fn read_translated(run: &mut Run, path: &Path) -> Result<Vec<TranslatedQa>> {
    let text = run.read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

/// Pairs source contexts with their translations, checking ids.
fn context_pairs(source: &[QaExample], translated: &[TranslatedQa], tokenizer: Tokenizer) -> Result<Vec<BitextPair>> {
    if source.len() != translated.len() {
        return Err(Error::arg(format!(
            "{} QA records but {} translated records",
            source.len(),
            translated.len()
        )));
    }
    source
        .iter()
        .zip(translated)
        .map(|(s, t)| {
            if s.id != t.id {
                return Err(Error::invalid(&s.id, "id", format!("translated record is {:?}", t.id)));
            }
            Ok(BitextPair::new(s.context.clone(), t.context.clone(), tokenizer))
        })
        .collect()
}

impl BitextArgs {
    pub fn load(&self, run: &mut Run) -> Result<Vec<BitextPair>> {
        match (&self.src, &self.tgt, &self.tsv, &self.qa, &self.translated) {
            (Some(src), Some(tgt), None, None, None) => read_bitext(run, src, tgt, self.tokenizer),
            (None, None, Some(tsv), None, None) => read_bitext_tsv(run, tsv, self.tokenizer),
            (None, None, None, Some(qa), Some(translated)) => {
                let source = run.dataset(qa, Task::Qa)?;
                let translated = read_translated(run, translated)?;
                context_pairs(source.as_qa()?, &translated, self.tokenizer)
            }
            _ => Err(Error::arg(
                "give exactly one bitext source: --src/--tgt, --tsv or --qa/--translated",
            )),
        }
    }
}

fn report(args: &ReportArgs, run: &mut Run) -> Result<Option<std::path::PathBuf>> {
    let text = run.read_text(&args.input)?;
    let report: Report = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", args.input.display()),
    })?;
    let rendered = render(&report);
    match &args.out {
        Some(out) => {
            run.write(out, rendered.into_bytes());
            Ok(Some(out.clone()))
        }
        None => {
            print!("{rendered}");
            Ok(None)
        }
    }
}
