use std::collections::BTreeMap;
use std::path::PathBuf;

use transart::datamodel::LanguageTag;
use transart::filter::{filter_corpus, train_langid, FilterConfig, LangIdConfig, LangIdModel};
use transart::report::Report;
use transart::{Error, Result};

use super::{emit, read_bitext, read_bitext_tsv};
use crate::args::FilterArgs;
use crate::run::Run;

fn langid(args: &FilterArgs, run: &mut Run) -> Result<Option<LangIdModel>> {
    if let Some(path) = &args.langid_model {
        return LangIdModel::from_json(&run.read_text(path)?).map(Some);
    }
    if args.langid_train.is_empty() {
        return Ok(None);
    }
    let mut corpus: BTreeMap<LanguageTag, Vec<String>> = BTreeMap::new();
    for item in &args.langid_train {
        let (lang, path) = item
            .split_once('=')
            .ok_or_else(|| Error::arg(format!("--langid-train {item:?} must be LANG=PATH")))?;
        let text = run.read_text(PathBuf::from(path).as_path())?;
        corpus
            .entry(lang.parse()?)
            .or_default()
            .extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_owned));
    }
    let config = LangIdConfig {
        min_texts_per_language: args.langid_min_texts,
        ..LangIdConfig::default()
    };
    let model = train_langid(&corpus, &config)?;
    if let Some(path) = &args.save_langid {
        run.write(path, model.to_json().into_bytes());
    }
    Ok(Some(model))
}

pub fn run(args: &FilterArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let config = FilterConfig {
        max_tokens: args.max_tokens,
        max_ratio: args.max_ratio,
        langid_min_confidence: args.langid_min_confidence,
        tokenizer: args.tokenizer,
        ..FilterConfig::new(args.src_lang.clone(), args.tgt_lang.clone())
    };
    config.validate()?;
    let pairs = match (&args.src, &args.tgt, &args.tsv) {
        (Some(src), Some(tgt), None) => read_bitext(run, src, tgt, args.tokenizer)?,
        (None, None, Some(tsv)) => read_bitext_tsv(run, tsv, args.tokenizer)?,
        _ => return Err(Error::arg("give either --src and --tgt, or --tsv")),
    };
    let model = langid(args, run)?;
    let (kept, report) = filter_corpus(pairs.into_iter().map(Ok), model.as_ref(), &config)?;

    let side = |f: fn(&transart::datamodel::BitextPair) -> &str| -> Vec<u8> {
        kept.iter().flat_map(|p| format!("{}\n", f(p)).into_bytes()).collect()
    };
    if let (Some(src), Some(tgt)) = (&args.out_src, &args.out_tgt) {
        run.write(src, side(|p| &p.source));
        run.write(tgt, side(|p| &p.target));
    }
    if let Some(tsv) = &args.out_tsv {
        let bytes = kept
            .iter()
            .flat_map(|p| format!("{}\t{}\n", p.source, p.target).into_bytes())
            .collect();
        run.write(tsv, bytes);
    }
    emit(run, &Report::Filter(report), args.report.as_deref());
    Ok(args
        .out_src
        .clone()
        .or_else(|| args.out_tsv.clone())
        .or_else(|| args.report.clone()))
}
