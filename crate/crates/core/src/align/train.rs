//! EM training for Model 1 and the diagonally-favoring reparameterized
//! Model 2.
//!
//! The E-step runs in parallel over sentence pairs, but posteriors are
//! folded into the expected counts sequentially in corpus order, so the
//! resulting tables are bit-identical for any worker count.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::model::{AlignmentModel, AlignmentPrior, InternedCorpus};
use super::TrainingConfig;
use crate::datamodel::BitextPair;
use crate::error::{Error, Result};

/// Model plus the corpus log-likelihood seen by every E-step; the last
/// entry is the likelihood under the returned model.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: AlignmentModel,
    pub log_likelihood: Vec<f64>,
}

/// `-|i/n - j/m|` with 1-based source position `i` and target position `j`.
pub(crate) fn diagonal_feature(i: usize, j: usize, n: usize, m: usize) -> f64 {
    -((i as f64 / n as f64) - (j as f64 / m as f64)).abs()
}

/// Prior over `[null, 1..=n]` for every target position, laid out like the
/// pair's cells (`j * (n + 1) + i`).
pub(crate) fn prior_table(prior: AlignmentPrior, n: usize, m: usize) -> Vec<f64> {
    let width = n + 1;
    let mut table = vec![0.0; width * m];
    for j in 0..m {
        let row = &mut table[j * width..(j + 1) * width];
        match prior {
            AlignmentPrior::Uniform => row.fill(1.0 / width as f64),
            AlignmentPrior::Diagonal { tension, p0 } => {
                if n == 0 {
                    row[0] = 1.0;
                    continue;
                }
                let mut z = 0.0;
                for i in 1..=n {
                    let w = (tension * diagonal_feature(i, j + 1, n, m)).exp();
                    row[i] = w;
                    z += w;
                }
                row[0] = p0;
                for w in &mut row[1..] {
                    *w *= (1.0 - p0) / z;
                }
            }
        }
    }
    table
}

pub(crate) struct PairPosterior {
    pub log_likelihood: f64,
    /// Posterior link probabilities, same layout as the pair's cells.
    pub posterior: Vec<f64>,
    /// `Σ_j Σ_{i≥1} q_ij · feature(i, j)`
    pub feature_mass: f64,
    /// Non-null posterior mass per target position.
    pub aligned_mass: Vec<f64>,
}

pub(crate) fn pair_posterior(
    model: &AlignmentModel,
    n: usize,
    cells: &[usize],
    prior: &[f64],
) -> PairPosterior {
    let width = n + 1;
    let m = if width == 0 { 0 } else { cells.len() / width };
    let mut posterior = vec![0.0; cells.len()];
    let mut log_likelihood = 0.0;
    let mut feature_mass = 0.0;
    let mut aligned_mass = vec![0.0; m];
    for j in 0..m {
        let base = j * width;
        let mut denom = 0.0;
        for i in 0..width {
            let s = prior[base + i] * model.probs[cells[base + i]];
            posterior[base + i] = s;
            denom += s;
        }
        let denom = denom.max(f64::MIN_POSITIVE);
        log_likelihood += denom.ln();
        for i in 0..width {
            posterior[base + i] /= denom;
        }
        aligned_mass[j] = posterior[base + 1..base + width].iter().sum();
        if n > 0 {
            for i in 1..width {
                feature_mass += posterior[base + i] * diagonal_feature(i, j + 1, n, m);
            }
        }
    }
    PairPosterior {
        log_likelihood,
        posterior,
        feature_mass,
        aligned_mass,
    }
}

pub(crate) struct EStep {
    pub log_likelihood: f64,
    /// Expected count per table cell.
    pub counts: Vec<f64>,
    pub feature_mass: f64,
    /// `(n, m)` → non-null posterior mass per target position.
    pub aligned_mass: BTreeMap<(usize, usize), Vec<f64>>,
    pub target_tokens: usize,
}

pub(crate) fn e_step(model: &AlignmentModel, corpus: &InternedCorpus) -> EStep {
    let mut priors: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for (src, tgt) in &corpus.pairs {
        priors
            .entry((src.len(), tgt.len()))
            .or_insert_with(|| prior_table(model.prior, src.len(), tgt.len()));
    }
    let posteriors: Vec<PairPosterior> = corpus
        .pairs
        .par_iter()
        .zip(corpus.cells.par_iter())
        .map(|((src, tgt), cells)| pair_posterior(model, src.len(), cells, &priors[&(src.len(), tgt.len())]))
        .collect();

    let mut step = EStep {
        log_likelihood: 0.0,
        counts: vec![0.0; model.probs.len()],
        feature_mass: 0.0,
        aligned_mass: BTreeMap::new(),
        target_tokens: 0,
    };
    for (((src, tgt), cells), post) in corpus.pairs.iter().zip(&corpus.cells).zip(posteriors) {
        step.log_likelihood += post.log_likelihood;
        step.feature_mass += post.feature_mass;
        step.target_tokens += tgt.len();
        for (&cell, &q) in cells.iter().zip(&post.posterior) {
            step.counts[cell] += q;
        }
        let mass = step
            .aligned_mass
            .entry((src.len(), tgt.len()))
            .or_insert_with(|| vec![0.0; tgt.len()]);
        for (acc, r) in mass.iter_mut().zip(&post.aligned_mass) {
            *acc += r;
        }
    }
    step
}

/// Renormalizes expected counts into `t(f|e)`. Rows without any expected
/// mass keep their previous values.
pub(crate) fn m_step_table(model: &mut AlignmentModel, counts: &[f64]) {
    let mut totals = vec![0.0; model.source_vocab.len()];
    for (&(e, _), &c) in model.cell_keys.iter().zip(counts) {
        totals[e as usize] += c;
    }
    for (id, &(e, _)) in model.cell_keys.iter().enumerate() {
        let total = totals[e as usize];
        if total > 0.0 {
            model.probs[id] = counts[id] / total;
        }
    }
}

/// Log-partition of the non-null positional prior for target position `j`.
fn log_partition(tension: f64, j: usize, n: usize, m: usize) -> (f64, f64) {
    // returns (ln Z, d ln Z / d tension)
    let mut z = 0.0;
    let mut dz = 0.0;
    for i in 1..=n {
        let h = diagonal_feature(i, j, n, m);
        let w = (tension * h).exp();
        z += w;
        dz += h * w;
    }
    (z.ln(), dz / z)
}

/// Expected complete-data log prior as a function of the tension, and its
/// derivative. Concave in the tension.
fn tension_objective(tension: f64, step: &EStep) -> (f64, f64) {
    let mut value = tension * step.feature_mass;
    let mut grad = step.feature_mass;
    for (&(n, m), mass) in &step.aligned_mass {
        if n == 0 {
            continue;
        }
        for (j, &r) in mass.iter().enumerate() {
            let (log_z, dlog_z) = log_partition(tension, j + 1, n, m);
            value -= r * log_z;
            grad -= r * dlog_z;
        }
    }
    (value, grad)
}

/// Projected gradient ascent on the tension with step halving; never
/// lowers the objective.
pub(crate) fn update_tension(tension: f64, step: &EStep, config: &TrainingConfig) -> f64 {
    let tokens = step.target_tokens.max(1) as f64;
    let mut current = tension;
    let (mut value, mut grad) = tension_objective(current, step);
    for _ in 0..config.tension_steps {
        if grad.abs() < 1e-12 {
            break;
        }
        let mut delta = 20.0 * grad / tokens;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = (current + delta).clamp(0.0, config.max_tension);
            if candidate == current {
                break;
            }
            let (v, g) = tension_objective(candidate, step);
            if v >= value {
                current = candidate;
                value = v;
                grad = g;
                accepted = true;
                break;
            }
            delta /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    current
}

fn check_bitext(bitext: &[BitextPair]) -> Result<()> {
    if bitext.is_empty() {
        return Err(Error::arg("cannot train an aligner on an empty bitext"));
    }
    Ok(())
}

pub fn train_ibm1(bitext: &[BitextPair], config: &TrainingConfig) -> Result<TrainedModel> {
    config.validate()?;
    check_bitext(bitext)?;
    let mut model = AlignmentModel::empty(config.vocab_limit);
    let corpus = model.intern(bitext)?;
    let mut log_likelihood = Vec::with_capacity(config.ibm1_iterations + 1);
    for _ in 0..config.ibm1_iterations {
        let step = e_step(&model, &corpus);
        log_likelihood.push(step.log_likelihood);
        m_step_table(&mut model, &step.counts);
    }
    log_likelihood.push(e_step(&model, &corpus).log_likelihood);
    Ok(TrainedModel { model, log_likelihood })
}

/// Continues from `init` with the diagonal prior. The table is extended
/// with any word pairs `bitext` adds.
pub fn train_diagonal(bitext: &[BitextPair], init: &AlignmentModel, config: &TrainingConfig) -> Result<TrainedModel> {
    config.validate()?;
    check_bitext(bitext)?;
    let mut model = init.clone();
    model.vocab_limit = config.vocab_limit;
    let mut tension = match init.prior {
        AlignmentPrior::Diagonal { tension, .. } => tension,
        AlignmentPrior::Uniform => config.initial_tension,
    };
    model.prior = AlignmentPrior::Diagonal { tension, p0: config.p0 };
    let corpus = model.intern(bitext)?;
    let mut log_likelihood = Vec::with_capacity(config.diagonal_iterations + 1);
    for _ in 0..config.diagonal_iterations {
        let step = e_step(&model, &corpus);
        log_likelihood.push(step.log_likelihood);
        m_step_table(&mut model, &step.counts);
        if config.optimize_tension {
            tension = update_tension(tension, &step, config);
        }
        model.prior = AlignmentPrior::Diagonal { tension, p0: config.p0 };
    }
    log_likelihood.push(e_step(&model, &corpus).log_likelihood);
    Ok(TrainedModel { model, log_likelihood })
}

/// Model 1 initialization followed by the diagonal stage.
pub fn train(bitext: &[BitextPair], config: &TrainingConfig) -> Result<TrainedModel> {
    let stage1 = train_ibm1(bitext, config)?;
    if config.diagonal_iterations == 0 {
        return Ok(stage1);
    }
    train_diagonal(bitext, &stage1.model, config)
}

/// Expected link counts `(source word or null, target word) → count` of one
/// E-step under `model`.
pub fn expected_counts(model: &AlignmentModel, bitext: &[BitextPair]) -> Result<BTreeMap<(Option<String>, String), f64>> {
    let mut scratch = model.clone();
    let corpus = scratch.intern(bitext)?;
    let step = e_step(&scratch, &corpus);
    Ok(scratch
        .table()
        .into_iter()
        .zip(step.counts)
        .filter(|(_, c)| *c != 0.0)
        .map(|((e, f, _), c)| ((e.map(str::to_owned), f.to_owned()), c))
        .collect())
}

/// Corpus log-likelihood `Σ_pairs Σ_j ln Σ_i prior_ij t(f_j | e_i)`.
pub fn log_likelihood(model: &AlignmentModel, bitext: &[BitextPair]) -> Result<f64> {
    let mut scratch = model.clone();
    let corpus = scratch.intern(bitext)?;
    Ok(e_step(&scratch, &corpus).log_likelihood)
}
