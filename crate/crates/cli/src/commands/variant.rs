use std::path::PathBuf;

use transart::datamodel::{Dataset, LanguageTag};
use transart::report::{Report, VariantSummary};
use transart::variant::{backend_selfcheck, build_variant, BackendConfig, BackendSource, PipelineSpec, TranslationCache, Variant};
use transart::{Error, Result};

use super::{emit, jsonl};
use crate::args::{SelfcheckArgs, VariantBuildArgs};
use crate::run::Run;

pub const CACHE_DIR_ENV: &str = "TRANSART_CACHE_DIR";

fn backend_config(spec: &str, decoding: &str, batch_size: usize, run: &mut Run) -> Result<BackendConfig> {
    let mut config = BackendConfig::parse(spec)?.with_decoding(decoding)?;
    if batch_size == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    config.batch_size = batch_size;
    if let BackendSource::Table(path) = &config.source {
        // hashed for the manifest; the table itself is loaded by the backend
        run.read(&path.clone())?;
    }
    Ok(config)
}

fn cache_path(args: &VariantBuildArgs) -> Option<PathBuf> {
    args.cache.clone().or_else(|| {
        std::env::var_os(CACHE_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join("translations.tsv"))
    })
}

fn source_language(args: &VariantBuildArgs, dataset: &Dataset) -> Result<LanguageTag> {
    if let Some(lang) = &args.source_lang {
        return Ok(lang.clone());
    }
    let mut langs: Vec<&LanguageTag> = match dataset {
        Dataset::Nli(r) => r.iter().map(|x| &x.language).collect(),
        Dataset::Qa(r) => r.iter().map(|x| &x.language).collect(),
    };
    langs.sort();
    langs.dedup();
    match langs.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(Error::arg("empty dataset: pass --source-lang")),
        _ => Err(Error::arg("records mix languages: pass --source-lang")),
    }
}

pub fn build(args: &VariantBuildArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let dataset = run.dataset(&args.input, args.task)?;
    let spec = PipelineSpec::from_name(&args.spec, &source_language(args, &dataset)?)?;
    let backend = backend_config(&args.backend, &args.decoding, args.batch_size, run)?.build()?;
    let mut cache = match cache_path(args) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            if path.exists() {
                run.read(&path)?;
            }
            run.side_output(&path);
            TranslationCache::open(&path)?
        }
        None => TranslationCache::in_memory(),
    };
    let before = cache.len();
    let variant = build_variant(&dataset, &spec, backend.as_ref(), &mut cache)?;
    cache.flush()?;
    let bytes = match &variant {
        Variant::Nli(records) => jsonl(records),
        Variant::Qa(records) => jsonl(records),
    };
    run.write(&args.output, bytes);
    let summary = VariantSummary {
        pipeline: spec.name.clone(),
        records: dataset.len(),
        cache_entries_before: before,
        cache_entries_after: cache.len(),
    };
    emit(run, &Report::Variant(summary), args.report.as_deref());
    Ok(Some(args.output.clone()))
}

pub fn selfcheck(args: &SelfcheckArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let backend = backend_config(&args.backend, "", 64, run)?.build()?;
    let report = backend_selfcheck(backend.as_ref(), &args.direction);
    let failures = report.failures.join("; ");
    emit(run, &Report::Selfcheck(report), args.report.as_deref());
    if !failures.is_empty() {
        return Err(Error::Backend {
            index: 0,
            text: String::new(),
            message: failures,
        });
    }
    Ok(args.report.clone())
}
