//! Seeded generators for synthetic corpora with known ground truth.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::collections::BTreeMap;

use crate::datamodel::{Alignment, BitextPair, LanguageTag, Provenance, QaAnswer, QaExample};
use crate::variant::TranslatedQa;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sample_sentence(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..vocab).collect();
    let (chosen, _) = ids.partial_shuffle(rng, len.min(vocab));
    chosen.to_vec()
}

/// Pairs whose target is an exact copy of the source. Words within a
/// sentence are distinct.
pub fn copy_corpus(pairs: usize, vocab: usize, lengths: (usize, usize), seed: u64) -> Vec<BitextPair> {
    let mut rng = rng(seed);
    (0..pairs)
        .map(|_| {
            let len = rng.gen_range(lengths.0..=lengths.1);
            let words: Vec<String> = sample_sentence(&mut rng, vocab, len)
                .into_iter()
                .map(|k| format!("w{k}"))
                .collect();
            BitextPair::from_tokens(words.clone(), words)
        })
        .collect()
}

/// Target = word-by-word dictionary image of the source, with adjacent
/// positions swapped pairwise (0↔1, 2↔3, ...).
#[derive(Clone, Debug)]
pub struct PlantedCorpus {
    pub pairs: Vec<BitextPair>,
    pub gold: Vec<Alignment>,
    /// `dictionary[k]` is the target word index of source word `k`.
    pub dictionary: Vec<usize>,
}

pub fn swap_permutation(len: usize) -> Vec<usize> {
    (0..len)
        .map(|i| if i % 2 == 0 { if i + 1 < len { i + 1 } else { i } } else { i - 1 })
        .collect()
}

pub fn planted_permutation_corpus(
    pairs: usize,
    vocab: usize,
    lengths: (usize, usize),
    permutation: fn(usize) -> Vec<usize>,
    seed: u64,
) -> PlantedCorpus {
    let mut rng = rng(seed);
    let mut dictionary: Vec<usize> = (0..vocab).collect();
    dictionary.shuffle(&mut rng);
    let mut out = Vec::with_capacity(pairs);
    let mut gold = Vec::with_capacity(pairs);
    for index in 0..pairs {
        let len = rng.gen_range(lengths.0..=lengths.1);
        let words = sample_sentence(&mut rng, vocab, len);
        let perm = permutation(words.len());
        // source position i lands at target position perm[i]
        let mut target = vec![String::new(); words.len()];
        for (i, &k) in words.iter().enumerate() {
            target[perm[i]] = format!("t{}", dictionary[k]);
        }
        let source: Vec<String> = words.iter().map(|k| format!("s{k}")).collect();
        gold.push(
            Alignment::new(index, source.len(), target.len(), perm.iter().enumerate().map(|(i, &j)| (i, j)))
                .expect("permutation links are valid"),
        );
        out.push(BitextPair::from_tokens(source, target));
    }
    PlantedCorpus {
        pairs: out,
        gold,
        dictionary,
    }
}

/// Unrelated random sentence pairs, for likelihood checks.
pub fn random_corpus(pairs: usize, vocab: usize, lengths: (usize, usize), seed: u64) -> Vec<BitextPair> {
    let mut rng = rng(seed);
    (0..pairs)
        .map(|_| {
            let ls = rng.gen_range(lengths.0..=lengths.1);
            let lt = rng.gen_range(lengths.0..=lengths.1);
            let src = (0..ls).map(|_| format!("a{}", rng.gen_range(0..vocab))).collect();
            let tgt = (0..lt).map(|_| format!("b{}", rng.gen_range(0..vocab))).collect();
            BitextPair::from_tokens(src, tgt)
        })
        .collect()
}

/// Logit vectors whose argmax class follows `proportions` (exact counts by
/// largest remainder, random order). Winning margins are drawn uniformly
/// so calibration has a continuum of gaps to work with.
pub fn skewed_logits(n: usize, proportions: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let k = proportions.len();
    let mut counts: Vec<usize> = proportions.iter().map(|p| (p * n as f64).floor() as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ra = proportions[a] * n as f64 - counts[a] as f64;
        let rb = proportions[b] * n as f64 - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        counts[c] += 1;
    }
    let mut winners: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat(c).take(m)).collect();
    winners.shuffle(&mut rng);
    winners
        .into_iter()
        .map(|win| {
            let mut z: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            z[win] = top + rng.gen_range(0.01..3.0);
            z
        })
        .collect()
}

/// Random sentences of at least `min_chars` characters drawn from a
/// frequency-ranked word list (Zipf-like weights `1/(rank+1)`).
pub fn word_list_sentences(words: &[String], count: usize, min_chars: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    let weights: Vec<f64> = (0..words.len()).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    let dist = rand::distributions::WeightedIndex::new(&weights).expect("non-empty word list");
    (0..count)
        .map(|_| {
            let mut sentence = String::new();
            while sentence.chars().count() < min_chars {
                if !sentence.is_empty() {
                    sentence.push(' ');
                }
                sentence.push_str(&words[rng.sample(&dist)]);
            }
            let mut chars = sentence.chars();
            let first: String = chars.next().into_iter().flat_map(char::to_uppercase).collect();
            format!("{first}{}.", chars.as_str())
        })
        .collect()
}

/// QA records built on a planted corpus: contexts are the joined source
/// tokens, translations the joined target tokens, and each answer is a run
/// of one to three source tokens.
#[derive(Clone, Debug)]
pub struct PlantedQa {
    pub records: Vec<QaExample>,
    pub translated: Vec<TranslatedQa>,
    /// Gold alignments, minus the links of answer tokens in planted
    /// unaligned examples.
    pub alignments: Vec<Alignment>,
    /// Expected target character span, `None` where the answer was made
    /// unaligned.
    pub oracle: Vec<Option<(usize, usize)>>,
}

fn offsets(tokens: &[String]) -> Vec<(usize, usize)> {
    let mut pos = 0;
    tokens
        .iter()
        .map(|t| {
            let start = pos;
            pos += t.chars().count() + 1;
            (start, start + t.chars().count())
        })
        .collect()
}

/// Every `unaligned_every`-th example (starting with the first) loses the
/// alignment links of its answer tokens; 0 disables that.
pub fn planted_qa(corpus: &PlantedCorpus, unaligned_every: usize, seed: u64) -> PlantedQa {
    let mut rng = rng(seed);
    let mut out = PlantedQa {
        records: Vec::new(),
        translated: Vec::new(),
        alignments: Vec::new(),
        oracle: Vec::new(),
    };
    for (k, (pair, gold)) in corpus.pairs.iter().zip(&corpus.gold).enumerate() {
        let n = pair.source_tokens.len();
        let len = rng.gen_range(1..=3.min(n));
        let first = rng.gen_range(0..=n - len);
        let answer = first..first + len;
        let src = offsets(&pair.source_tokens);
        let tgt = offsets(&pair.target_tokens);
        let context = pair.source_tokens.join(" ");
        let id = format!("planted-{k}");
        out.records.push(QaExample {
            id: id.clone(),
            answers: vec![QaAnswer::new(
                pair.source_tokens[answer.clone()].join(" "),
                src[first].0,
            )],
            context,
            question: format!("where is {}?", pair.source_tokens[first]),
            language: LanguageTag::new("en").expect("valid tag"),
            provenance: Provenance::Original,
            extra: BTreeMap::new(),
        });
        out.translated.push(TranslatedQa {
            id,
            context: pair.target_tokens.join(" "),
            question: format!("where is {}?", pair.source_tokens[first]),
            language: LanguageTag::new("fi").expect("valid tag"),
            provenance: Provenance::MachineTranslated,
        });
        let unaligned = unaligned_every > 0 && k % unaligned_every == 0;
        let mut alignment = gold.clone();
        if unaligned {
            alignment.links.retain(|(i, _)| !answer.contains(i));
            out.oracle.push(None);
        } else {
            let js: Vec<usize> = gold
                .links
                .iter()
                .filter(|(i, _)| answer.contains(i))
                .map(|&(_, j)| j)
                .collect();
            let lo = *js.iter().min().expect("planted links cover every token");
            let hi = *js.iter().max().expect("planted links cover every token");
            out.oracle.push(Some((tgt[lo].0, tgt[hi].1)));
        }
        out.alignments.push(alignment);
    }
    out
}
