//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet};
use std::hash::{Hash, Hasher};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::Rng;
use transart::align::{train, train_diagonal, train_ibm1, viterbi_all, TrainingConfig};
use transart::calibrate::{apply_bias, calibrate, BiasVector, CalibrationConfig};
use transart::datamodel::{
    load_dataset, write_dataset_to, Alignment, BitextPair, Dataset, LabelOrder, LanguageTag, NliExample, NliLabel,
    PredictionOutput, PredictionRecord, Provenance, Task,
};
use transart::eval::{aggregate_runs, grouped_accuracy, nli_accuracy, qa_scores, NormalizeOptions, ResultTable, RowKey};
use transart::filter::{filter_pair, train_langid, FilterConfig, LangIdConfig, RejectReason, Verdict};
use transart::spans::{map_dataset, MapMode};
use transart::stats::{lexical_overlap, ClassDistribution};
use transart::synthetic::{
    copy_corpus, planted_permutation_corpus, planted_qa, random_corpus, rng, skewed_logits, swap_permutation,
    word_list_sentences,
};
use transart::tokenize::Tokenizer;
use transart::variant::{
    build_nli_variant, Backend, BackendFailure, Direction, FnBackend, PipelineSpec, TranslationCache,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn tag(s: &str) -> LanguageTag {
    LanguageTag::new(s).unwrap()
}

fn uniform() -> ClassDistribution {
    ClassDistribution::target(&LabelOrder::nli(), &[1.0, 1.0, 1.0]).unwrap()
}

/// Argmax with the lowest index winning ties, written out independently of
/// the library.
fn counts(logits: &[Vec<f64>], bias: &[f64]) -> Vec<usize> {
    let mut c = vec![0; bias.len()];
    for z in logits {
        let mut best = 0;
        for k in 1..bias.len() {
            if z[k] + bias[k] > z[best] + bias[best] {
                best = k;
            }
        }
        c[best] += 1;
    }
    c
}

fn calibration_fidelity() -> Outcome {
    let z = skewed_logits(3000, &[0.20, 0.45, 0.35], 2024);
    ensure!(counts(&z, &[0.0; 3]) == vec![600, 1350, 1050], "planted skew not realized");
    let start = Instant::now();
    let result = calibrate(&z, &CalibrationConfig::new(uniform())).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(result.sweeps_used <= 50, "{} sweeps", result.sweeps_used);
    let achieved: Vec<f64> = counts(&z, result.bias.values()).iter().map(|&c| c as f64 / 3000.0).collect();
    let worst = achieved.iter().map(|p| (p - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    ensure!(worst <= 0.005, "proportions {achieved:?}");
    ensure!(achieved == result.achieved.probabilities, "reported distribution differs from measured");
    ensure!(elapsed < 1.0, "calibration took {elapsed:.3}s");

    // Six examples that all prefer class 0. The grid over [-10, 10]^3 with
    // step 0.01 is searched through the bias differences (b1 - b0, b2 - b0),
    // which decide every argmax; a difference pair comes from a point of the
    // cube iff the spread of {0, d1, d2} is at most 20.
    let small = vec![
        vec![5.0, 1.0, 0.5],
        vec![4.0, 3.9, -2.0],
        vec![6.0, -1.0, 5.5],
        vec![3.0, 2.0, 2.5],
        vec![7.0, 0.0, 0.0],
        vec![2.0, 1.5, 1.9],
    ];
    let mut grid_hits = 0usize;
    for k1 in -2000i32..=2000 {
        for k2 in -2000i32..=2000 {
            if 0.max(k1).max(k2) - 0.min(k1).min(k2) > 2000 {
                continue;
            }
            if counts(&small, &[0.0, k1 as f64 / 100.0, k2 as f64 / 100.0]) == vec![2, 2, 2] {
                grid_hits += 1;
            }
        }
    }
    ensure!(grid_hits > 0, "grid finds no balanced bias");
    let fit = calibrate(&small, &CalibrationConfig::new(uniform())).map_err(|e| e.to_string())?;
    ensure!(fit.converged, "six-example fit did not converge");
    ensure!(counts(&small, fit.bias.values()) == vec![2, 2, 2], "six-example fit {:?}", fit.bias);
    Ok(format!(
        "max error {worst:.4} in {} sweeps, {elapsed:.3}s; grid oracle {grid_hits} balanced points",
        result.sweeps_used
    ))
}

fn argmax_invariance() -> Outcome {
    let mut r = rng(2);
    for _ in 0..1000 {
        let n = r.gen_range(1..30);
        let z: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.gen_range(-6.0..6.0)).collect()).collect();
        let b = BiasVector::new((0..3).map(|_| r.gen_range(-3.0..3.0)).collect()).unwrap();
        let base = apply_bias(&z, &b).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let c = r.gen_range(-50.0..50.0);
            ensure!(apply_bias(&z, &b.shifted(c)).unwrap() == base, "shift {c} changed decisions for {z:?}");
        }
    }
    Ok("1000 logit sets x 10 shifts".into())
}

fn identity_rate(alignments: &[Alignment]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for a in alignments {
        total += a.tgt_len;
        hit += (0..a.tgt_len).filter(|&j| a.links.contains(&(j, j))).count();
    }
    hit as f64 / total as f64
}

fn aligner_correctness() -> Outcome {
    let start = Instant::now();
    let cfg = TrainingConfig::default();
    for seed in 0..3 {
        let corpus = random_corpus(200, 50, (1, 15), 40 + seed);
        let m1 = train_ibm1(&corpus, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            m1.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-9),
            "model 1 likelihood fell: {:?}",
            m1.log_likelihood
        );
        let diag = train_diagonal(&corpus, &m1.model, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            diag.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-6),
            "diagonal likelihood fell: {:?}",
            diag.log_likelihood
        );
    }

    let copy = copy_corpus(1000, 200, (4, 16), 41);
    let five_and_five = TrainingConfig {
        ibm1_iterations: 5,
        diagonal_iterations: 5,
        ..TrainingConfig::default()
    };
    let model = train(&copy, &five_and_five).map_err(|e| e.to_string())?.model;
    let identity = identity_rate(&viterbi_all(&model, &copy));
    ensure!(identity >= 0.99, "copy corpus identity rate {identity}");

    let planted = planted_permutation_corpus(500, 200, (4, 14), swap_permutation, 42);
    let model = train(&planted.pairs, &cfg).map_err(|e| e.to_string())?.model;
    let (mut correct, mut predicted, mut gold) = (0usize, 0usize, 0usize);
    for (p, g) in viterbi_all(&model, &planted.pairs).iter().zip(&planted.gold) {
        correct += p.links.intersection(&g.links).count();
        predicted += p.links.len();
        gold += g.links.len();
    }
    let (precision, recall) = (correct as f64 / predicted as f64, correct as f64 / gold as f64);
    ensure!(precision >= 0.95 && recall >= 0.95, "precision {precision} recall {recall}");
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 30.0, "aligner checks took {elapsed:.1}s");
    Ok(format!(
        "identity {identity:.4}, planted P {precision:.4} R {recall:.4}, {elapsed:.1}s"
    ))
}

fn span_mapping_oracle() -> Outcome {
    let corpus = planted_permutation_corpus(500, 200, (4, 14), swap_permutation, 43);
    let qa = planted_qa(&corpus, 7, 44);
    let unaligned: Vec<&str> = qa
        .records
        .iter()
        .zip(&qa.oracle)
        .filter(|(_, o)| o.is_none())
        .map(|(r, _)| r.id.as_str())
        .collect();
    ensure!(!unaligned.is_empty(), "no planted unaligned cases");

    let ws = Tokenizer::Whitespace;
    let (mapped, report) =
        map_dataset(&qa.records, &qa.translated, &qa.alignments, MapMode::Discard, ws).map_err(|e| e.to_string())?;
    let discarded: Vec<&str> = report.discarded.iter().map(|d| d.id.as_str()).collect();
    ensure!(discarded == unaligned, "discarded {} vs planted {}", discarded.len(), unaligned.len());
    let expected: Vec<(usize, usize)> = qa.oracle.iter().flatten().copied().collect();
    ensure!(mapped.len() == expected.len(), "{} mapped, {} expected", mapped.len(), expected.len());
    for (example, &(start, end)) in mapped.iter().zip(&expected) {
        let a = &example.answers[0];
        ensure!((a.char_start, a.char_end()) == (start, end), "{}: span differs from oracle", example.id);
    }

    let (kept, report) = map_dataset(&qa.records, &qa.translated, &qa.alignments, MapMode::FallbackSourceAnswer, ws)
        .map_err(|e| e.to_string())?;
    ensure!(kept.len() == qa.records.len(), "fallback dropped records");
    ensure!(report.fallback_english == unaligned, "fallback set differs from planted set");
    for ((example, source), oracle) in kept.iter().zip(&qa.records).zip(&qa.oracle) {
        if oracle.is_none() {
            ensure!(
                example.answers[0].text == source.answers[0].text && example.answers[0].fallback,
                "{} does not carry its source answer",
                example.id
            );
        }
    }
    Ok(format!("{} mapped exactly, {} discarded as planted", mapped.len(), unaligned.len()))
}

fn sized(src: usize, tgt: usize) -> BitextPair {
    BitextPair::from_tokens(vec!["w".to_string(); src], vec!["v".to_string(); tgt])
}

fn words(lang: &str) -> Vec<String> {
    std::fs::read_to_string(fixture(&format!("langid/{lang}.txt")))
        .unwrap()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn filter_exactness() -> Outcome {
    let cfg = FilterConfig::new(tag("en"), tag("fi"));
    ensure!(filter_pair(&sized(250, 250), None, &cfg) == Verdict::Keep, "250 tokens rejected");
    ensure!(
        filter_pair(&sized(251, 200), None, &cfg) == Verdict::Reject(RejectReason::TooLong),
        "251 tokens kept"
    );
    ensure!(filter_pair(&sized(150, 100), None, &cfg) == Verdict::Keep, "ratio 1.5 rejected");
    ensure!(
        filter_pair(&sized(151, 100), None, &cfg) == Verdict::Reject(RejectReason::Ratio),
        "ratio 1.51 kept"
    );
    let mut tight = cfg.clone();
    tight.max_ratio = 1.5 - 1e-9;
    ensure!(
        filter_pair(&sized(150, 100), None, &tight) == Verdict::Reject(RejectReason::Ratio),
        "ratio 1.5 kept under threshold 1.5 - 1e-9"
    );
    // every length pair up to 300 against exact integer arithmetic
    for s in 0..=300 {
        for t in 0..=300 {
            let (long, short) = (s.max(t), s.min(t).max(1));
            let want = if long > 250 {
                Verdict::Reject(RejectReason::TooLong)
            } else if 2 * long > 3 * short {
                Verdict::Reject(RejectReason::Ratio)
            } else {
                Verdict::Keep
            };
            ensure!(filter_pair(&sized(s, t), None, &cfg) == want, "({s}, {t})");
        }
    }

    let mut train_set = BTreeMap::new();
    let mut held_out = BTreeMap::new();
    for (k, lang) in ["en", "es", "fi"].into_iter().enumerate() {
        let list = words(lang);
        train_set.insert(tag(lang), word_list_sentences(&list, 1000, 50, 500 + k as u64));
        held_out.insert(tag(lang), word_list_sentences(&list, 300, 50, 600 + k as u64));
    }
    let model = train_langid(&train_set, &LangIdConfig::default()).map_err(|e| e.to_string())?;
    let (mut right, mut total) = (0usize, 0usize);
    for (lang, texts) in &held_out {
        for t in texts {
            ensure!(t.chars().count() >= 50, "short held-out text");
            total += 1;
            right += usize::from(&model.classify(t).unwrap().0 == lang);
        }
    }
    let accuracy = right as f64 / total as f64;
    ensure!(accuracy >= 0.95, "langid accuracy {accuracy}");
    Ok(format!("boundaries exact on 301x301 grid, langid accuracy {accuracy:.4}"))
}

fn nli(id: &str, premise: &str, hypothesis: &str, label: NliLabel) -> NliExample {
    NliExample {
        id: id.into(),
        premise: premise.into(),
        hypothesis: hypothesis.into(),
        label,
        language: tag("en"),
        provenance: Provenance::Original,
        genre: None,
        extra: BTreeMap::new(),
    }
}

fn dataset_bytes(records: &[NliExample]) -> Vec<u8> {
    let mut out = Vec::new();
    write_dataset_to(&Dataset::Nli(records.to_vec()), &mut out).unwrap();
    out
}

/// Every call renders differently, so only the cache can make repeats agree.
struct Noisy(AtomicUsize);

impl Backend for Noisy {
    fn translate_raw(&self, texts: &[String], d: &Direction) -> Result<Vec<Vec<u8>>, BackendFailure> {
        Ok(texts
            .iter()
            .map(|t| format!("<{}:{}> {t}", d.target, self.0.fetch_add(1, Ordering::SeqCst)).into_bytes())
            .collect())
    }
}

struct Unreachable;

impl Backend for Unreachable {
    fn translate_raw(&self, _: &[String], _: &Direction) -> Result<Vec<Vec<u8>>, BackendFailure> {
        Err(BackendFailure {
            index: 0,
            message: "backend called although the cache is populated".into(),
            partial: Vec::new(),
        })
    }
}

fn rot13(text: &str, _: &Direction) -> String {
    text.chars()
        .map(|c| match c {
            'a'..='z' => (((c as u8 - b'a') + 13) % 26 + b'a') as char,
            'A'..='Z' => (((c as u8 - b'A') + 13) % 26 + b'A') as char,
            _ => c,
        })
        .collect()
}

fn variant_determinism() -> Outcome {
    let data = vec![
        nli("p1", "A man plays the old guitar.", "Someone makes music.", NliLabel::Entailment),
        nli("p2", "A man plays the old guitar.", "The man is asleep.", NliLabel::Contradiction),
        nli("p3", "A man plays the old guitar.", "He plays at a concert.", NliLabel::Neutral),
        nli("q1", "Two dogs run across the field.", "Animals are outside.", NliLabel::Entailment),
    ];
    let spec = PipelineSpec::from_name("BT-FI", &tag("en")).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("cache.tsv");
    let first = {
        let mut cache = TranslationCache::open(&journal).map_err(|e| e.to_string())?;
        build_nli_variant(&data, &spec, &Noisy(AtomicUsize::new(0)), &mut cache).map_err(|e| e.to_string())?
    };
    let second = {
        let mut cache = TranslationCache::open(&journal).map_err(|e| e.to_string())?;
        build_nli_variant(&data, &spec, &Unreachable, &mut cache).map_err(|e| e.to_string())?
    };
    ensure!(dataset_bytes(&first) == dataset_bytes(&second), "cached rebuild differs");
    ensure!(
        first[0].premise.as_bytes() == first[1].premise.as_bytes()
            && first[1].premise.as_bytes() == first[2].premise.as_bytes(),
        "repeated premise translated differently"
    );
    ensure!(first[0].hypothesis != first[1].hypothesis, "noisy backend did not vary");

    let round = build_nli_variant(&data, &spec, &FnBackend(rot13), &mut TranslationCache::in_memory())
        .map_err(|e| e.to_string())?;
    let strip = |r: &NliExample| (r.id.clone(), r.premise.clone(), r.hypothesis.clone(), r.label, r.language.clone());
    ensure!(
        round.iter().map(strip).eq(data.iter().map(strip)),
        "involutive stub did not reproduce the dataset"
    );
    Ok("cached rebuild byte-identical, premise shared by 3 hypotheses, rot13 round trip exact".into())
}

fn metric_suite() -> Outcome {
    let o = NormalizeOptions::default();
    let cases: &[(&str, &[&str], f64, f64)] = &[
        ("The Cat", &["cat"], 1.0, 1.0),
        ("a cat sat", &["the cat sat down"], 0.8, 0.0),
        ("Helsinki.", &["helsinki"], 1.0, 1.0),
        ("in the garden", &["garden"], 2.0 / 3.0, 0.0),
        ("red red blue", &["red blue blue"], 2.0 / 3.0, 0.0),
        ("nowhere", &["somewhere", "Nowhere!"], 1.0, 1.0),
        ("", &[""], 1.0, 1.0),
        ("", &["x"], 0.0, 0.0),
    ];
    for &(pred, golds, f1, em) in cases {
        let (got_f1, got_em) = qa_scores(pred, golds, o).map_err(|e| e.to_string())?;
        ensure!((got_f1 - f1).abs() < 1e-9 && (got_em - em).abs() < 1e-9, "{pred:?}: ({got_f1}, {got_em})");
    }

    const WORDS: &[&str] = &["the", "a", "an", "cat", "Cat", "dog,", "sat", "!", "mat", "café", "ääni", "."];
    let mut r = rng(7);
    let phrase = |r: &mut rand_chacha::ChaCha8Rng| {
        (0..r.gen_range(0..6)).map(|_| WORDS[r.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
    };
    for _ in 0..10_000 {
        let (p, g) = (phrase(&mut r), phrase(&mut r));
        let (f1, em) = qa_scores(&p, &[&g], o).unwrap();
        ensure!(em <= f1, "{p:?} vs {g:?}: em {em} > f1 {f1}");
    }

    let genres = ["fiction", "travel", "slate", "government"];
    let order = LabelOrder::nli();
    let gold: Vec<NliExample> = (0..120)
        .map(|k| NliExample {
            genre: Some(genres[r.gen_range(0..genres.len())].to_string()),
            ..nli(&format!("g{k}"), "p", "h", NliLabel::ALL[r.gen_range(0..3)])
        })
        .collect();
    let preds: Vec<PredictionRecord> = gold
        .iter()
        .map(|g| PredictionRecord {
            example_id: g.id.clone(),
            seed: 0,
            epoch: None,
            output: PredictionOutput::Logits((0..3).map(|_| r.gen_range(-1.0..1.0)).collect()),
        })
        .collect();
    let grouped = grouped_accuracy(&preds, &gold, &order, "genre").map_err(|e| e.to_string())?;
    let correct: usize = grouped.groups.values().map(|g| g.correct).sum();
    let total: usize = grouped.groups.values().map(|g| g.total).sum();
    let weighted: f64 = grouped.groups.values().map(|g| g.accuracy * g.total as f64).sum::<f64>() / total as f64;
    let pooled = nli_accuracy(&preds, &gold, &order).map_err(|e| e.to_string())?;
    ensure!(total == gold.len() && correct == grouped.pooled.correct, "group tallies do not recompose");
    ensure!((weighted - pooled).abs() < 1e-12, "weighted {weighted} vs pooled {pooled}");

    let runs: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| r.gen_range(0.0..100.0)).collect()).collect();
    let tables: Vec<ResultTable> = runs
        .iter()
        .enumerate()
        .map(|(seed, values)| {
            let mut t = ResultTable::new();
            let cells = ["en", "es", "fi"].iter().map(|l| l.to_string()).zip(values.iter().copied()).collect();
            t.push(RowKey { system: "sys".into(), seed: Some(seed as u64), epoch: None }, cells).unwrap();
            t
        })
        .collect();
    let (mean, std) = aggregate_runs(&tables).map_err(|e| e.to_string())?;
    let key = RowKey { system: "sys".into(), seed: None, epoch: None };
    for (c, lang) in ["en", "es", "fi"].iter().enumerate() {
        let xs: Vec<f64> = runs.iter().map(|v| v[c]).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let s = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        let (gm, gs) = (mean.get(&key).unwrap().values[*lang], std.get(&key).unwrap().values[*lang]);
        ensure!((gm - m).abs() < 1e-12 && (gs - s).abs() < 1e-12, "{lang}: ({gm}, {gs}) vs ({m}, {s})");
    }
    Ok("hand cases, 10000 EM <= F1 pairs, grouped recomposition, two-pass aggregate".into())
}

fn overlap_fixture(n: usize) -> Vec<NliExample> {
    const VOCAB: &[&str] = &[
        "man", "woman", "dog", "plays", "runs", "the", "a", "park", "ball", "red", "near", "river", "child", "eats",
        "bread", "under", "tree", "sings",
    ];
    let mut r = rng(8);
    (0..n)
        .map(|k| {
            let premise: Vec<&str> = (0..r.gen_range(6..12)).map(|_| VOCAB[r.gen_range(0..VOCAB.len())]).collect();
            let hypothesis: Vec<&str> = (0..r.gen_range(3..7))
                .map(|_| {
                    if r.gen_bool(0.7) {
                        premise[r.gen_range(0..premise.len())]
                    } else {
                        VOCAB[r.gen_range(0..VOCAB.len())]
                    }
                })
                .collect();
            nli(&format!("o{k}"), &premise.join(" "), &hypothesis.join(" "), NliLabel::ALL[k % 3])
        })
        .collect()
}

/// Swaps every other token for one unique to the input text.
fn perturb(text: &str, _: &Direction) -> String {
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    let salt = h.finish();
    text.split(' ')
        .enumerate()
        .map(|(i, w)| if i % 2 == 0 { format!("x{salt:x}{i}") } else { w.to_string() })
        .collect::<Vec<_>>()
        .join(" ")
}

fn identity(text: &str, _: &Direction) -> String {
    text.to_string()
}

/// Share of hypothesis token types found among the premise tokens.
fn overlap_oracle(premise: &str, hypothesis: &str) -> f64 {
    let p: HashSet<&str> = premise.split_whitespace().collect();
    let h: HashSet<&str> = hypothesis.split_whitespace().collect();
    h.iter().filter(|t| p.contains(*t)).count() as f64 / h.len() as f64
}

fn artifact_direction() -> Outcome {
    let data = overlap_fixture(200);
    let spec = PipelineSpec::from_name("MT-ES", &tag("en")).map_err(|e| e.to_string())?;
    let build = |f: fn(&str, &Direction) -> String| {
        build_nli_variant(&data, &spec, &FnBackend(f), &mut TranslationCache::in_memory()).map_err(|e| e.to_string())
    };
    let (same, noisy) = (build(identity)?, build(perturb)?);
    let mean = |records: &[NliExample]| -> Result<f64, String> {
        let mut sum = 0.0;
        for r in records {
            let got = lexical_overlap(&r.premise, &r.hypothesis, Tokenizer::Whitespace).map_err(|e| e.to_string())?;
            let want = overlap_oracle(&r.premise, &r.hypothesis);
            ensure!((got - want).abs() < 1e-12, "{}: overlap {got} vs oracle {want}", r.id);
            sum += got;
        }
        Ok(sum / records.len() as f64)
    };
    let (a, b) = (mean(&same)?, mean(&noisy)?);
    ensure!(b < a, "perturbed {b} not below identity {a}");
    Ok(format!("mean overlap {a:.4} -> {b:.4}"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_transart")
}

fn transart(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin())
        .current_dir(dir)
        .args(args)
        .env_remove("TRANSART_CACHE_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.code() == Some(0),
        "`transart {}` exited {:?}: {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (k, lang) in ["en", "fi", "es"].into_iter().enumerate() {
        std::fs::write(
            d.join(format!("{lang}.txt")),
            word_list_sentences(&words(lang), 300, 50, 900 + k as u64).join("\n"),
        )
        .unwrap();
    }
    let f = |name: &str| fixture(name).display().to_string();
    let (nli_set, preds) = (f("toy_nli.jsonl"), f("toy_preds.jsonl"));
    let steps: Vec<Vec<String>> = vec![
        vec![
            "filter", "--src", &f("toy_bitext.en"), "--tgt", &f("toy_bitext.fi"), "--src-lang", "en", "--tgt-lang",
            "fi", "--langid-train", "en=en.txt", "--langid-train", "fi=fi.txt", "--langid-train", "es=es.txt",
            "--out-src", "clean.en", "--out-tgt", "clean.fi", "--report", "filter.json",
        ],
        vec![
            "variant", "build", "--spec", "BT-FI", "--backend", "cmd: tr a-zA-Z n-za-mN-ZA-M", "--cache",
            "cache.tsv", "--report", "variant.json", &nli_set, "bt.jsonl",
        ],
        vec!["stats", "overlap", &format!("orig={nli_set}"), "bt=bt.jsonl", "--report", "overlap.json"],
        vec!["stats", "classes", "--preds", &format!("toy:en={preds}"), "--report", "classes.json"],
        vec!["calibrate", "--target", "uniform", "--fit", &preds, "--out", "calibrated.jsonl", "--report", "calibration.json"],
        vec!["eval", "nli", "--gold", &nli_set, "--preds", "calibrated.jsonl", "--group-by", "genre", "--report", "eval.json"],
    ]
    .into_iter()
    .map(|s| s.into_iter().map(str::to_string).collect())
    .collect();

    let start = Instant::now();
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        transart(d, &args)?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    for primary in ["clean.en", "bt.jsonl", "overlap.json", "classes.json", "calibrated.jsonl", "eval.json"] {
        let manifest = d.join(format!("{primary}.manifest.json"));
        ensure!(manifest.is_file(), "no manifest for {primary}");
        let value: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
        ensure!(value["outputs"].get(primary).is_some(), "{primary} missing from its manifest outputs");
    }
    let texts = |path: &Path| -> Vec<(String, String, String)> {
        let data = load_dataset(path, Task::Nli).unwrap();
        data.as_nli().unwrap().iter().map(|r| (r.id.clone(), r.premise.clone(), r.hypothesis.clone())).collect()
    };
    ensure!(
        texts(&d.join("bt.jsonl")) == texts(&fixture("toy_nli.jsonl")),
        "involutive stub changed the toy texts"
    );
    ensure!(elapsed < 10.0, "pipeline took {elapsed:.2}s");
    Ok(format!("{} steps, all manifests written, {elapsed:.2}s", steps.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("calibration fidelity", calibration_fidelity),
        ("argmax invariance", argmax_invariance),
        ("aligner correctness", aligner_correctness),
        ("span-mapping oracle", span_mapping_oracle),
        ("filter exactness", filter_exactness),
        ("variant determinism and dedup", variant_determinism),
        ("metric suite", metric_suite),
        ("artifact direction", artifact_direction),
        ("end-to-end fixture", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
