use super::model::{AlignmentModel, NULL_ID, UNSEEN_PROB};
use super::train::prior_table;
use crate::datamodel::{Alignment, BitextPair};

/// Best source position per target token, or none when the null word
/// scores highest. Ties go to the smaller source index, with null counting
/// as position zero.
pub fn viterbi_align(model: &AlignmentModel, pair: &BitextPair, pair_index: usize) -> Alignment {
    let (src, tgt) = model.lookup_pair(pair);
    let n = src.len();
    let m = tgt.len();
    let prior = prior_table(model.prior, n, m);
    let prob = |e: Option<u32>, f: Option<u32>| match (e, f) {
        (Some(e), Some(f)) => model.prob_ids(e, f),
        _ => UNSEEN_PROB,
    };
    let mut links = Vec::new();
    for (j, &f) in tgt.iter().enumerate() {
        let base = j * (n + 1);
        let mut best_score = prior[base] * prob(Some(NULL_ID), f);
        let mut best = None;
        for (i, &e) in src.iter().enumerate() {
            let score = prior[base + i + 1] * prob(e, f);
            if score > best_score {
                best_score = score;
                best = Some(i);
            }
        }
        if let Some(i) = best {
            links.push((i, j));
        }
    }
    Alignment::new(pair_index, n, m, links).expect("viterbi links are in bounds and unique")
}
