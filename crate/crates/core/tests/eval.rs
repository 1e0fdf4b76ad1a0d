use rand::seq::SliceRandom;
use rand::Rng;
use transart::eval::{aggregate_runs, qa_scores, NormalizeOptions, ResultTable, RowKey};
use transart::synthetic::rng;

#[test]
fn qa_hand_cases() {
    let o = NormalizeOptions::default();
    let cases: &[(&str, &[&str], f64, f64)] = &[
        ("The Cat", &["cat"], 1.0, 1.0),
        ("black cat", &["cat sat"], 0.5, 0.0),
        ("Paris", &["Paris"], 1.0, 1.0),
        ("in the garden", &["garden"], 2.0 / 3.0, 0.0),
        ("an apple, a pear", &["apple pear"], 1.0, 1.0),
        ("", &[""], 1.0, 1.0),
        ("", &["x"], 0.0, 0.0),
        ("cat cat dog", &["cat dog dog"], 2.0 / 3.0, 0.0),
        ("wrong", &["nope", "Wrong!"], 1.0, 1.0),
    ];
    for &(pred, golds, f1, em) in cases {
        let (got_f1, got_em) = qa_scores(pred, golds, o).unwrap();
        assert!((got_f1 - f1).abs() < 1e-9, "{pred:?}: f1 {got_f1} want {f1}");
        assert!((got_em - em).abs() < 1e-9, "{pred:?}: em {got_em} want {em}");
    }
}

fn random_answer(r: &mut impl Rng) -> String {
    const WORDS: &[&str] = &["the", "a", "cat", "Cat", "dog,", "sat", "an", "!", "mat", "café", "ääni"];
    (0..r.gen_range(0..6))
        .map(|_| WORDS[r.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn exact_match_never_exceeds_f1() {
    let mut r = rng(12);
    for _ in 0..10_000 {
        let pred = random_answer(&mut r);
        let gold = random_answer(&mut r);
        let (f1, em) = qa_scores(&pred, &[&gold], NormalizeOptions::default()).unwrap();
        assert!(em <= f1, "{pred:?} vs {gold:?}");
    }
}

fn table(values: &[[f64; 3]], seed: u64) -> ResultTable {
    let mut t = ResultTable::new();
    for (k, row) in values.iter().enumerate() {
        t.push(
            RowKey {
                system: format!("sys{k}"),
                seed: Some(seed),
                epoch: None,
            },
            ["en", "es", "fi"].iter().map(|l| l.to_string()).zip(row.iter().copied()).collect(),
        )
        .unwrap();
    }
    t
}

#[test]
fn aggregate_matches_two_pass_oracle() {
    let mut r = rng(3);
    let runs: Vec<Vec<[f64; 3]>> = (0..5)
        .map(|_| (0..4).map(|_| [r.gen(), r.gen(), r.gen()]).collect())
        .collect();
    let tables: Vec<ResultTable> = runs.iter().enumerate().map(|(s, v)| table(v, s as u64)).collect();
    let (mean, std) = aggregate_runs(&tables).unwrap();
    for sys in 0..4 {
        for (c, lang) in ["en", "es", "fi"].iter().enumerate() {
            let xs: Vec<f64> = runs.iter().map(|run| run[sys][c]).collect();
            let m = xs.iter().sum::<f64>() / 5.0;
            let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 5.0;
            let key = RowKey {
                system: format!("sys{sys}"),
                seed: None,
                epoch: None,
            };
            assert!((mean.get(&key).unwrap().values[*lang] - m).abs() < 1e-12);
            assert!((std.get(&key).unwrap().values[*lang] - v.sqrt()).abs() < 1e-12);
        }
    }
    let mut shuffled = tables.clone();
    shuffled.shuffle(&mut r);
    assert_eq!(aggregate_runs(&shuffled).unwrap(), (mean, std));
}

#[test]
fn result_table_json_round_trip() {
    let t = table(&[[0.5, 0.25, 0.125]], 2);
    let json = serde_json::to_string(&t).unwrap();
    let back: ResultTable = serde_json::from_str(&json).unwrap();
    assert_eq!(back, t);
    let merged = ResultTable::merge([t.clone(), table(&[[0.1, 0.2, 0.3]], 3)]).unwrap();
    assert_eq!(merged.split_by_seed().len(), 2);
    assert!(ResultTable::merge([t.clone(), t]).is_err());
}
