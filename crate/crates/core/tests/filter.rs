use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;
use transart::datamodel::{BitextPair, LanguageTag};
use transart::filter::{filter_corpus, filter_pair, read_bitext, train_langid, FilterConfig, LangIdConfig, RejectReason, Verdict};
use transart::synthetic::word_list_sentences;
use transart::tokenize::Tokenizer;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn tag(s: &str) -> LanguageTag {
    LanguageTag::new(s).unwrap()
}

fn words(lang: &str) -> Vec<String> {
    std::fs::read_to_string(fixture(&format!("langid/{lang}.txt")))
        .unwrap()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn sized(src: usize, tgt: usize) -> BitextPair {
    BitextPair::from_tokens(vec!["w".to_string(); src], vec!["v".to_string(); tgt])
}

fn config() -> FilterConfig {
    FilterConfig::new(tag("en"), tag("fi"))
}

#[test]
fn length_boundary() {
    let cfg = config();
    assert_eq!(filter_pair(&sized(250, 250), None, &cfg), Verdict::Keep);
    assert_eq!(filter_pair(&sized(251, 250), None, &cfg), Verdict::Reject(RejectReason::TooLong));
    assert_eq!(filter_pair(&sized(250, 251), None, &cfg), Verdict::Reject(RejectReason::TooLong));
}

#[test]
fn ratio_boundary() {
    let cfg = config();
    assert_eq!(filter_pair(&sized(3, 2), None, &cfg), Verdict::Keep);
    assert_eq!(filter_pair(&sized(150, 100), None, &cfg), Verdict::Keep);
    assert_eq!(filter_pair(&sized(151, 100), None, &cfg), Verdict::Reject(RejectReason::Ratio));
    assert_eq!(filter_pair(&sized(100, 151), None, &cfg), Verdict::Reject(RejectReason::Ratio));
    // 1.5 + epsilon on a real-valued threshold
    let mut tight = config();
    tight.max_ratio = 1.5 - 1e-9;
    assert_eq!(filter_pair(&sized(150, 100), None, &tight), Verdict::Reject(RejectReason::Ratio));
}

proptest! {
    #[test]
    fn thresholds_hold_everywhere(src in 0usize..400, tgt in 0usize..400) {
        let verdict = filter_pair(&sized(src, tgt), None, &config());
        let (long, short) = (src.max(tgt), src.min(tgt).max(1));
        let expected = if long > 250 {
            Verdict::Reject(RejectReason::TooLong)
        } else if 2 * long > 3 * short {
            Verdict::Reject(RejectReason::Ratio)
        } else {
            Verdict::Keep
        };
        prop_assert_eq!(verdict, expected);
    }
}

#[test]
fn planted_rejections_are_counted_exactly() {
    let mut corpus = BTreeMap::new();
    for (k, lang) in ["en", "fi", "es"].into_iter().enumerate() {
        corpus.insert(tag(lang), word_list_sentences(&words(lang), 400, 50, k as u64));
    }
    let model = train_langid(&corpus, &LangIdConfig::default()).unwrap();
    let en = word_list_sentences(&words("en"), 100, 50, 91);
    let fi = word_list_sentences(&words("fi"), 100, 50, 92);
    let es = word_list_sentences(&words("es"), 5, 50, 93);

    let ws = Tokenizer::Whitespace;
    // Pads the shorter side with a filler word of its own language so the
    // ratio rule never fires by accident.
    let aligned = |src: &str, tgt: &str, filler: &str| {
        let (s, t) = (ws.count(src), ws.count(tgt));
        let pad = |text: &str, word: &str, n: usize| format!("{text}{}", format!(" {word}").repeat(n));
        if s > t {
            BitextPair::new(src, pad(tgt, filler, s - t), ws)
        } else {
            BitextPair::new(pad(src, "the", t - s), tgt, ws)
        }
    };
    let mut stream = Vec::new();
    for k in 0..100 {
        stream.push(aligned(&en[k], &fi[k], "ja"));
    }
    for k in 0..10 {
        stream.insert(7 * k + 3, sized(251 + k, 251));
    }
    for k in 0..20 {
        stream.insert(5 * k + 1, sized(10 + k, 2 * (10 + k)));
    }
    for (k, text) in es.iter().enumerate() {
        stream.insert(11 * k + 2, aligned(&en[k], text, "de"));
    }
    let total = stream.len();
    let (kept, report) = filter_corpus(stream.into_iter().map(Ok), Some(&model), &config()).unwrap();
    assert_eq!(report.too_long, 10);
    assert_eq!(report.total_in, total);
    assert_eq!(report.total_out, kept.len());
    assert_eq!(report.total_in, report.total_out + report.rejected());
    assert_eq!(report.langid_source, 0);
    assert_eq!(report.ratio, 20, "{report:?}");
    assert_eq!(report.langid_target, 5, "{report:?}");
    assert_eq!(kept.len(), 100);
}

#[test]
fn toy_bitext_fixture() {
    let pairs = read_bitext(fixture("toy_bitext.en"), fixture("toy_bitext.fi"), Tokenizer::Whitespace).unwrap();
    let (kept, report) = filter_corpus(pairs.into_iter().map(Ok), None, &config()).unwrap();
    assert_eq!(report.too_long, 1);
    assert_eq!(report.ratio, 1);
    assert_eq!(kept.len(), 30);
}
