use std::io::Cursor;
use std::path::{Path, PathBuf};

use transart::align::{self as aligner, symmetrize, viterbi_all, AlignmentModel, TrainingConfig};
use transart::datamodel::{write_pharaoh_to, Alignment, BitextPair};
use transart::report::{AlignSummary, Report};
use transart::variant::Direction;
use transart::{Error, Result};

use super::{emit, read_bitext, read_bitext_tsv};
use crate::args::{AlignTrainArgs, AlignViterbiArgs};
use crate::run::Run;

fn model_bytes(model: &AlignmentModel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    model.write_tsv(&mut out)?;
    Ok(out)
}

fn read_model(run: &mut Run, path: &Path) -> Result<AlignmentModel> {
    let bytes = run.read(path)?;
    AlignmentModel::read_tsv(Cursor::new(bytes)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn training_config(args: &AlignTrainArgs) -> TrainingConfig {
    TrainingConfig {
        ibm1_iterations: args.ibm1_iterations,
        diagonal_iterations: args.diagonal_iterations,
        initial_tension: args.tension,
        p0: args.p0,
        tension_steps: args.tension_steps,
        optimize_tension: !args.fixed_tension,
        max_tension: args.max_tension,
        vocab_limit: args.vocab_limit,
    }
}

pub fn train(args: &AlignTrainArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let config = training_config(args);
    config.validate()?;
    let target = args.bitext.load(run)?;
    let tokenizer = args.bitext.tokenizer;
    let auxiliary = match (&args.aux_src, &args.aux_tgt, &args.aux_tsv) {
        (Some(s), Some(t), None) => read_bitext(run, s, t, tokenizer)?,
        (None, None, Some(tsv)) => read_bitext_tsv(run, tsv, tokenizer)?,
        _ => Vec::new(),
    };
    let combined: Vec<BitextPair> = target.iter().chain(&auxiliary).cloned().collect();
    let direction = match (&args.src_lang, &args.tgt_lang) {
        (Some(s), Some(t)) => Some(Direction::new(s.clone(), t.clone())),
        (None, None) => None,
        _ => return Err(Error::arg("give both --src-lang and --tgt-lang, or neither")),
    };

    let mut forward = aligner::train(&combined, &config)?;
    forward.model.direction = direction.clone();
    run.write(&args.forward, model_bytes(&forward.model)?);
    if let Some(path) = &args.reverse {
        let reversed: Vec<BitextPair> = combined.iter().map(BitextPair::reversed).collect();
        let mut reverse = aligner::train(&reversed, &config)?;
        reverse.model.direction = direction.map(|d| Direction::new(d.target, d.source));
        run.write(path, model_bytes(&reverse.model)?);
    }
    let summary = AlignSummary {
        pairs: combined.len(),
        log_likelihood: forward.log_likelihood,
        tension: forward.model.tension(),
        links: None,
    };
    emit(run, &Report::Align(summary), args.report.as_deref());
    Ok(Some(args.forward.clone()))
}

pub fn viterbi(args: &AlignViterbiArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let forward_model = read_model(run, &args.forward)?;
    let reverse_model = args.reverse.as_deref().map(|p| read_model(run, p)).transpose()?;
    let pairs = args.bitext.load(run)?;
    let forward = viterbi_all(&forward_model, &pairs);
    let alignments: Vec<Alignment> = match &reverse_model {
        Some(model) => {
            let reversed: Vec<BitextPair> = pairs.iter().map(BitextPair::reversed).collect();
            forward
                .iter()
                .zip(viterbi_all(model, &reversed))
                .map(|(f, r)| symmetrize(f, &r.transposed(), args.symmetrize))
                .collect::<Result<_>>()?
        }
        None => forward,
    };
    let mut bytes = Vec::new();
    write_pharaoh_to(&alignments, &mut bytes)?;
    run.write(&args.out, bytes);
    let summary = AlignSummary {
        pairs: pairs.len(),
        log_likelihood: Vec::new(),
        tension: forward_model.tension(),
        links: Some(alignments.iter().map(|a| a.links.len()).sum()),
    };
    emit(run, &Report::Align(summary), args.report.as_deref());
    Ok(Some(args.out.clone()))
}
