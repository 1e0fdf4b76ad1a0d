//! Statistical word alignment: Model 1 EM, then a reparameterized Model 2
//! whose alignment prior favors the diagonal, with Viterbi decoding and
//! symmetrization of the two directions.

mod model;
mod symmetrize;
mod train;
mod viterbi;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Alignment, BitextPair};
use crate::error::{Error, Result};

pub use model::{AlignmentModel, AlignmentPrior, Vocab, UNSEEN_PROB};
pub use symmetrize::{symmetrize, Symmetrization};
pub use train::{expected_counts, log_likelihood, train, train_diagonal, train_ibm1, TrainedModel};
pub use viterbi::viterbi_align;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub ibm1_iterations: usize,
    pub diagonal_iterations: usize,
    pub initial_tension: f64,
    pub p0: f64,
    /// Gradient steps on the tension per M-step.
    pub tension_steps: usize,
    pub optimize_tension: bool,
    pub max_tension: f64,
    pub vocab_limit: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            ibm1_iterations: 5,
            diagonal_iterations: 5,
            initial_tension: 4.0,
            p0: 0.08,
            tension_steps: 8,
            optimize_tension: true,
            max_tension: 14.0,
            vocab_limit: 1_000_000,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_tension >= 0.0) || !(self.max_tension >= self.initial_tension) {
            return Err(Error::arg("tension must satisfy 0 <= initial <= max"));
        }
        if !(0.0..1.0).contains(&self.p0) {
            return Err(Error::arg("p0 must lie in [0, 1)"));
        }
        if self.vocab_limit == 0 {
            return Err(Error::arg("vocabulary limit must be positive"));
        }
        Ok(())
    }
}

pub fn viterbi_all(model: &AlignmentModel, bitext: &[BitextPair]) -> Vec<Alignment> {
    bitext
        .iter()
        .enumerate()
        .map(|(k, pair)| viterbi_align(model, pair, k))
        .collect()
}

/// Trains on `target ++ auxiliary` and aligns only `target`.
pub fn align_with_auxiliary(
    target: &[BitextPair],
    auxiliary: &[BitextPair],
    config: &TrainingConfig,
) -> Result<Vec<Alignment>> {
    let combined: Vec<BitextPair> = target.iter().chain(auxiliary).cloned().collect();
    let trained = train(&combined, config)?;
    Ok(viterbi_all(&trained.model, target))
}

/// Forward and reverse models trained on `target ++ auxiliary`, combined
/// with `heuristic`, for the `target` pairs only.
pub fn align_bidirectional(
    target: &[BitextPair],
    auxiliary: &[BitextPair],
    config: &TrainingConfig,
    heuristic: Symmetrization,
) -> Result<Vec<Alignment>> {
    let forward = align_with_auxiliary(target, auxiliary, config)?;
    let rev_target: Vec<BitextPair> = target.iter().map(BitextPair::reversed).collect();
    let rev_aux: Vec<BitextPair> = auxiliary.iter().map(BitextPair::reversed).collect();
    let reverse = align_with_auxiliary(&rev_target, &rev_aux, config)?;
    forward
        .iter()
        .zip(reverse)
        .map(|(f, r)| symmetrize(f, &r.transposed(), heuristic))
        .collect()
}
