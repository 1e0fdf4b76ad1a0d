use std::collections::BTreeMap;
use std::path::PathBuf;

use transart::calibrate::{calibrate, BiasVector, CalibrationConfig};
use transart::datamodel::{write_predictions_to, PredictionOutput, PredictionRecord};
use transart::report::{CalibrationRun, Report};
use transart::stats::{class_distribution, ClassDistribution};
use transart::{Error, Result};

use super::{emit, labels};
use crate::args::CalibrateArgs;
use crate::run::Run;

type RunKey = (u64, Option<u32>);

fn by_run(records: &[PredictionRecord]) -> BTreeMap<RunKey, Vec<&PredictionRecord>> {
    let mut runs: BTreeMap<RunKey, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in records {
        runs.entry((r.seed, r.epoch)).or_default().push(r);
    }
    runs
}

fn logits(records: &[&PredictionRecord]) -> Result<Vec<Vec<f64>>> {
    records
        .iter()
        .map(|r| {
            r.logits()
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::invalid(&r.example_id, "logits", "record has no logits"))
        })
        .collect()
}

pub fn run(args: &CalibrateArgs, run: &mut Run) -> Result<Option<PathBuf>> {
    let order = labels(&args.labels)?;
    let config = CalibrationConfig {
        tolerance: args.tolerance,
        max_sweeps: args.max_sweeps,
        epsilon: args.epsilon,
        ..CalibrationConfig::new(ClassDistribution::parse_target(&args.target, &order)?)
    };
    config.validate()?;
    let fit_records = run.predictions(&args.fit, &order)?;
    if fit_records.is_empty() {
        return Err(Error::arg(format!("{} holds no predictions", args.fit.display())));
    }
    let apply_records = match &args.apply {
        Some(path) => Some(run.predictions(path, &order)?),
        None => None,
    };

    let mut fitted: BTreeMap<RunKey, BiasVector> = BTreeMap::new();
    let mut runs = Vec::new();
    for (key, records) in by_run(&fit_records) {
        let fit = calibrate(&logits(&records)?, &config)?;
        fitted.insert(key, fit.bias.clone());
        runs.push(CalibrationRun {
            seed: key.0,
            epoch: key.1,
            fit,
            applied: None,
        });
    }

    let target = apply_records.as_ref().unwrap_or(&fit_records);
    if let Some(apply) = &apply_records {
        let grouped = by_run(apply);
        for key in grouped.keys() {
            if !fitted.contains_key(key) {
                return Err(Error::arg(format!(
                    "no fitted bias for seed {} epoch {:?} of the --apply set",
                    key.0, key.1
                )));
            }
        }
        for entry in &mut runs {
            if let Some(records) = grouped.get(&(entry.seed, entry.epoch)) {
                let owned: Vec<PredictionRecord> = records.iter().map(|r| (*r).clone()).collect();
                entry.applied = Some(class_distribution(&owned, &order, Some(&entry.fit.bias))?);
            }
        }
    }

    if let Some(out) = &args.out {
        let biased: Vec<PredictionRecord> = target
            .iter()
            .map(|r| {
                let b = &fitted[&(r.seed, r.epoch)];
                let z = r
                    .logits()
                    .ok_or_else(|| Error::invalid(&r.example_id, "logits", "record has no logits"))?;
                Ok(PredictionRecord {
                    output: PredictionOutput::Logits(z.iter().zip(b.values()).map(|(z, b)| z + b).collect()),
                    ..r.clone()
                })
            })
            .collect::<Result<_>>()?;
        let mut bytes = Vec::new();
        write_predictions_to(&biased, &mut bytes)?;
        run.write(out, bytes);
    }
    emit(run, &Report::Calibration { runs }, args.report.as_deref());
    Ok(args.out.clone().or_else(|| args.report.clone()))
}
