//! JSON report envelope and plain-text table rendering.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationResult;
use crate::eval::{GroupedAccuracy, QaSummary, ResultTable};
use crate::filter::FilterReport;
use crate::spans::SpanMapReport;
use crate::stats::{ClassDistribution, ClassReport, LengthReport, OverlapReport};
use crate::variant::SelfCheckReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub pipeline: String,
    pub records: usize,
    pub cache_entries_before: usize,
    pub cache_entries_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignSummary {
    pub pairs: usize,
    pub log_likelihood: Vec<f64>,
    pub tension: Option<f64>,
    pub links: Option<usize>,
}

/// Calibration of one `(seed, epoch)` run of a prediction file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub seed: u64,
    pub epoch: Option<u32>,
    pub fit: CalibrationResult,
    /// Distribution on the prediction set the bias was applied to.
    pub applied: Option<ClassDistribution>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupedRun {
    pub seed: u64,
    pub epoch: Option<u32>,
    pub accuracy: GroupedAccuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointChoice {
    pub system: String,
    pub seed: Option<u64>,
    pub epoch: u32,
    pub average: f64,
}

fn run_name(seed: u64, epoch: Option<u32>) -> String {
    match epoch {
        Some(e) => format!("seed {seed} epoch {e}"),
        None => format!("seed {seed}"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Filter(FilterReport),
    Variant(VariantSummary),
    Selfcheck(SelfCheckReport),
    Align(AlignSummary),
    SpanMap(SpanMapReport),
    Overlap(OverlapReport),
    Classes(ClassReport),
    Lengths(LengthReport),
    Calibration {
        runs: Vec<CalibrationRun>,
    },
    Nli {
        table: ResultTable,
        grouped: Vec<GroupedRun>,
    },
    Qa(QaSummary),
    Aggregate {
        mean: ResultTable,
        std: ResultTable,
    },
    Checkpoints(Vec<CheckpointChoice>),
}

/// Left-aligns the first column and right-aligns the rest.
pub fn render_table(header: &[Vec<String>], rows: &[Vec<String>]) -> String {
    let width = header.iter().chain(rows).map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; width];
    for line in header.iter().chain(rows) {
        for (k, cell) in line.iter().enumerate() {
            widths[k] = widths[k].max(cell.chars().count());
        }
    }
    let fmt_line = |line: &Vec<String>| {
        let cells: Vec<String> = (0..width)
            .map(|k| {
                let cell = line.get(k).map(String::as_str).unwrap_or("");
                if k == 0 {
                    format!("{cell:<w$}", w = widths[k])
                } else {
                    format!("{cell:>w$}", w = widths[k])
                }
            })
            .collect();
        cells.join("  ").trim_end().to_string()
    };
    let mut out = String::new();
    for line in header {
        out.push_str(&fmt_line(line));
        out.push('\n');
    }
    let rule: usize = widths.iter().sum::<usize>() + 2 * width.saturating_sub(1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for line in rows {
        out.push_str(&fmt_line(line));
        out.push('\n');
    }
    out
}

fn pct(p: f64) -> String {
    format!("{:.1}", 100.0 * p)
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn row_label(key: &crate::eval::RowKey) -> String {
    let mut s = key.system.clone();
    if let Some(seed) = key.seed {
        s.push_str(&format!(" seed={seed}"));
    }
    if let Some(epoch) = key.epoch {
        s.push_str(&format!(" epoch={epoch}"));
    }
    s
}

/// Systems as rows, one column per language and a trailing unweighted
/// average; scores in percent, with `± std` when a deviation table is given.
pub fn render_result_table(mean: &ResultTable, std: Option<&ResultTable>) -> String {
    let columns: Vec<&str> = mean.columns().into_iter().collect();
    let mut header = vec!["system".to_string()];
    header.extend(columns.iter().map(|c| c.to_string()));
    let with_avg = columns.len() > 1;
    if with_avg {
        header.push("avg".into());
    }
    let rows: Vec<Vec<String>> = mean
        .rows
        .iter()
        .map(|row| {
            let dev = std.and_then(|s| s.get(&row.key));
            let mut line = vec![row_label(&row.key)];
            for c in &columns {
                line.push(match (row.values.get(*c), dev.and_then(|d| d.values.get(*c))) {
                    (Some(m), Some(s)) => format!("{} ± {}", pct(*m), pct(*s)),
                    (Some(m), None) => pct(*m),
                    _ => "-".into(),
                });
            }
            if with_avg {
                let present: Vec<f64> = columns.iter().filter_map(|c| row.values.get(*c).copied()).collect();
                line.push(if present.len() == columns.len() {
                    pct(present.iter().sum::<f64>() / present.len() as f64)
                } else {
                    "-".into()
                });
            }
            line
        })
        .collect();
    render_table(&[header], &rows)
}

/// Systems as rows, and for each language one percentage column per class.
pub fn render_class_report(report: &ClassReport) -> String {
    let languages: Vec<&str> = report
        .rows
        .iter()
        .map(|r| r.language.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let systems: Vec<&str> = {
        let mut seen = Vec::new();
        for r in &report.rows {
            if !seen.contains(&r.system.as_str()) {
                seen.push(r.system.as_str());
            }
        }
        seen
    };
    let short: Vec<String> = report
        .labels
        .iter()
        .map(|l| l.chars().take(3).collect::<String>())
        .collect();
    let mut top = vec![String::new()];
    let mut second = vec!["system".to_string()];
    for lang in &languages {
        for (k, s) in short.iter().enumerate() {
            top.push(if k == 0 { lang.to_string() } else { String::new() });
            second.push(s.clone());
        }
    }
    let rows: Vec<Vec<String>> = systems
        .iter()
        .map(|system| {
            let mut line = vec![system.to_string()];
            for lang in &languages {
                match report
                    .rows
                    .iter()
                    .find(|r| r.system == *system && r.language == *lang)
                {
                    Some(r) => line.extend(r.distribution.probabilities.iter().map(|&p| pct(p))),
                    None => line.extend(short.iter().map(|_| "-".to_string())),
                }
            }
            line
        })
        .collect();
    render_table(&[top, second], &rows)
}

fn kv(pairs: &[(&str, String)]) -> String {
    let rows: Vec<Vec<String>> = pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    render_table(&[vec!["field".into(), "value".into()]], &rows)
}

pub fn render(report: &Report) -> String {
    match report {
        Report::Filter(r) => kv(&[
            ("total_in", r.total_in.to_string()),
            ("total_out", r.total_out.to_string()),
            ("too_long", r.too_long.to_string()),
            ("ratio", r.ratio.to_string()),
            ("langid_source", r.langid_source.to_string()),
            ("langid_target", r.langid_target.to_string()),
        ]),
        Report::Variant(v) => kv(&[
            ("pipeline", v.pipeline.clone()),
            ("records", v.records.to_string()),
            ("cache_entries_before", v.cache_entries_before.to_string()),
            ("cache_entries_after", v.cache_entries_after.to_string()),
        ]),
        Report::Selfcheck(s) => {
            let mut pairs = vec![
                ("sent", s.sent.to_string()),
                ("received", s.received.map_or("-".into(), |r| r.to_string())),
                ("arity_ok", s.arity_ok.to_string()),
                ("nonempty_ok", s.nonempty_ok.to_string()),
                ("utf8_ok", s.utf8_ok.to_string()),
            ];
            pairs.extend(s.failures.iter().map(|f| ("failure", f.clone())));
            kv(&pairs)
        }
        Report::Align(a) => {
            let rows: Vec<Vec<String>> = a
                .log_likelihood
                .iter()
                .enumerate()
                .map(|(k, ll)| vec![k.to_string(), format!("{ll:.4}")])
                .collect();
            let mut out = kv(&[
                ("pairs", a.pairs.to_string()),
                ("tension", opt(a.tension, 4)),
                ("links", a.links.map_or("-".into(), |l| l.to_string())),
            ]);
            out.push('\n');
            out.push_str(&render_table(&[vec!["iteration".into(), "log_likelihood".into()]], &rows));
            out
        }
        Report::SpanMap(s) => {
            let mut pairs = vec![
                ("mapped", s.mapped_count.to_string()),
                ("discarded", s.discarded.len().to_string()),
                ("fallback_english", s.fallback_english.len().to_string()),
            ];
            pairs.extend(s.discarded.iter().map(|d| ("discarded_id", d.id.clone())));
            pairs.extend(s.fallback_english.iter().map(|id| ("fallback_id", id.clone())));
            kv(&pairs)
        }
        Report::Overlap(r) => {
            let header = vec![
                "dataset".to_string(),
                "label".into(),
                "provenance".into(),
                "language".into(),
                "count".into(),
                "mean".into(),
                "std".into(),
            ];
            let mut rows = Vec::new();
            for d in &r.datasets {
                rows.push(vec![
                    d.name.clone(),
                    "all".into(),
                    String::new(),
                    String::new(),
                    d.size.to_string(),
                    opt(d.mean, 4),
                    String::new(),
                ]);
                for c in &d.cells {
                    rows.push(vec![
                        d.name.clone(),
                        c.label.to_string(),
                        c.provenance.clone(),
                        c.language.clone(),
                        c.count.to_string(),
                        opt(c.mean, 4),
                        opt(c.std, 4),
                    ]);
                }
            }
            let mut out = render_table(&[header], &rows);
            if !r.deltas.is_empty() {
                let mut header = vec!["from".to_string(), "to".into(), "mean".into()];
                let labels: Vec<&String> = r.deltas[0].per_label.keys().collect();
                header.extend(labels.iter().map(|l| l.to_string()));
                let rows: Vec<Vec<String>> = r
                    .deltas
                    .iter()
                    .map(|d| {
                        let mut line = vec![d.from.clone(), d.to.clone(), opt(d.mean, 4)];
                        line.extend(labels.iter().map(|l| opt(d.per_label.get(*l).copied().flatten(), 4)));
                        line
                    })
                    .collect();
                out.push('\n');
                out.push_str(&render_table(&[header], &rows));
            }
            out
        }
        Report::Classes(r) => render_class_report(r),
        Report::Lengths(r) => {
            let header: Vec<String> = ["field", "label", "provenance", "count", "mean", "std", "p10", "p50", "p90", "max"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<String>> = r
                .groups
                .iter()
                .map(|g| {
                    vec![
                        g.field.clone(),
                        g.label.clone().unwrap_or_else(|| "-".into()),
                        g.provenance.clone(),
                        g.count.to_string(),
                        format!("{:.2}", g.mean),
                        format!("{:.2}", g.std),
                        g.p10.to_string(),
                        g.p50.to_string(),
                        g.p90.to_string(),
                        g.max.to_string(),
                    ]
                })
                .collect();
            render_table(&[header], &rows)
        }
        Report::Calibration { runs } => {
            let mut out = String::new();
            for run in runs {
                let (fit, applied) = (&run.fit, &run.applied);
                let mut header = vec!["class".to_string(), "bias".into(), "target".into(), "fit".into()];
                if applied.is_some() {
                    header.push("applied".into());
                }
                let rows: Vec<Vec<String>> = fit
                    .target
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(k, label)| {
                        let mut line = vec![
                            label.clone(),
                            format!("{:.6}", fit.bias.values()[k]),
                            pct(fit.target.probabilities[k]),
                            pct(fit.achieved.probabilities[k]),
                        ];
                        if let Some(a) = applied {
                            line.push(pct(a.probabilities[k]));
                        }
                        line
                    })
                    .collect();
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&run_name(run.seed, run.epoch));
                out.push('\n');
                out.push_str(&render_table(&[header], &rows));
                out.push_str(&format!(
                    "sweeps_used {}  converged {}\n",
                    fit.sweeps_used, fit.converged
                ));
            }
            out
        }
        Report::Nli { table, grouped } => {
            let mut out = render_result_table(table, None);
            for run in grouped {
                let g = &run.accuracy;
                let rows: Vec<Vec<String>> = g
                    .groups
                    .iter()
                    .map(|(k, s)| vec![k.clone(), s.total.to_string(), pct(s.accuracy)])
                    .chain([vec!["pooled".to_string(), g.pooled.total.to_string(), pct(g.pooled.accuracy)]])
                    .collect();
                out.push('\n');
                out.push_str(&run_name(run.seed, run.epoch));
                out.push('\n');
                out.push_str(&render_table(&[vec![g.field.clone(), "count".into(), "acc".into()]], &rows));
            }
            out
        }
        Report::Qa(q) => kv(&[
            ("count", q.count.to_string()),
            ("f1", pct(q.f1)),
            ("exact_match", pct(q.exact_match)),
            ("fallback_count", q.fallback_count.to_string()),
            ("fallback_f1", q.fallback_f1.map_or("-".into(), pct)),
            ("fallback_exact_match", q.fallback_exact_match.map_or("-".into(), pct)),
        ]),
        Report::Aggregate { mean, std } => render_result_table(mean, Some(std)),
        Report::Checkpoints(choices) => {
            let rows: Vec<Vec<String>> = choices
                .iter()
                .map(|c| {
                    vec![
                        c.system.clone(),
                        c.seed.map_or("-".into(), |s| s.to_string()),
                        c.epoch.to_string(),
                        pct(c.average),
                    ]
                })
                .collect();
            render_table(
                &[vec!["system".into(), "seed".into(), "epoch".into(), "avg".into()]],
                &rows,
            )
        }
    }
}
