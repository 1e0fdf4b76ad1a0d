use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use transart::align::Symmetrization;
use transart::datamodel::{LanguageTag, Task};
use transart::spans::MapMode;
use transart::tokenize::Tokenizer;
use transart::variant::Direction;

#[derive(Debug, Parser)]
#[command(name = "transart", version, about = "Measure and mitigate translation artifacts in cross-lingual data")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel sections (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop bitext pairs that are too long, badly length-matched or in the wrong language.
    Filter(FilterArgs),
    /// Build machine-translated or back-translated dataset variants.
    #[command(subcommand)]
    Variant(VariantCommand),
    /// Train word-alignment models and produce Viterbi alignments.
    #[command(subcommand)]
    Align(AlignCommand),
    /// Project QA answer spans onto translated contexts.
    MapSpans(MapSpansArgs),
    /// Overlap, class-distribution and length statistics.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Fit per-class logit biases that match a target class distribution.
    Calibrate(CalibrateArgs),
    /// Accuracy, QA metrics, seed aggregation and checkpoint selection.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Render a JSON report as aligned text tables.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Filter(_) => "filter",
            Command::Variant(VariantCommand::Build(_)) => "variant build",
            Command::Variant(VariantCommand::Selfcheck(_)) => "variant selfcheck",
            Command::Align(AlignCommand::Train(_)) => "align train",
            Command::Align(AlignCommand::Viterbi(_)) => "align viterbi",
            Command::MapSpans(_) => "map-spans",
            Command::Stats(StatsCommand::Overlap(_)) => "stats overlap",
            Command::Stats(StatsCommand::Classes(_)) => "stats classes",
            Command::Stats(StatsCommand::Lengths(_)) => "stats lengths",
            Command::Calibrate(_) => "calibrate",
            Command::Eval(EvalCommand::Nli(_)) => "eval nli",
            Command::Eval(EvalCommand::Qa(_)) => "eval qa",
            Command::Eval(EvalCommand::Aggregate(_)) => "eval aggregate",
            Command::Eval(EvalCommand::Checkpoint(_)) => "eval checkpoint",
            Command::Report(_) => "report",
        }
    }

    pub fn config_json(&self) -> serde_json::Value {
        let value = match self {
            Command::Filter(a) => serde_json::to_value(a),
            Command::Variant(VariantCommand::Build(a)) => serde_json::to_value(a),
            Command::Variant(VariantCommand::Selfcheck(a)) => serde_json::to_value(a),
            Command::Align(AlignCommand::Train(a)) => serde_json::to_value(a),
            Command::Align(AlignCommand::Viterbi(a)) => serde_json::to_value(a),
            Command::MapSpans(a) => serde_json::to_value(a),
            Command::Stats(StatsCommand::Overlap(a)) => serde_json::to_value(a),
            Command::Stats(StatsCommand::Classes(a)) => serde_json::to_value(a),
            Command::Stats(StatsCommand::Lengths(a)) => serde_json::to_value(a),
            Command::Calibrate(a) => serde_json::to_value(a),
            Command::Eval(EvalCommand::Nli(a)) => serde_json::to_value(a),
            Command::Eval(EvalCommand::Qa(a)) => serde_json::to_value(a),
            Command::Eval(EvalCommand::Aggregate(a)) => serde_json::to_value(a),
            Command::Eval(EvalCommand::Checkpoint(a)) => serde_json::to_value(a),
            Command::Report(a) => serde_json::to_value(a),
        };
        value.expect("argument structs serialize")
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    /// Source side, one sentence per line.
    #[arg(long, requires = "tgt", conflicts_with = "tsv")]
    pub src: Option<PathBuf>,
    /// Target side, line-aligned with --src.
    #[arg(long, requires = "src")]
    pub tgt: Option<PathBuf>,
    /// `source<TAB>target` lines instead of --src/--tgt.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    #[arg(long)]
    pub src_lang: LanguageTag,
    #[arg(long)]
    pub tgt_lang: LanguageTag,
    #[arg(long, default_value_t = 250)]
    pub max_tokens: usize,
    #[arg(long, default_value_t = 1.5)]
    pub max_ratio: f64,
    /// Language disagreements below this posterior are kept.
    #[arg(long, default_value_t = 0.0)]
    pub langid_min_confidence: f64,
    #[arg(long, default_value_t = Tokenizer::Whitespace)]
    pub tokenizer: Tokenizer,
    /// Trained language identifier (JSON).
    #[arg(long, conflicts_with = "langid_train")]
    pub langid_model: Option<PathBuf>,
    /// `LANG=PATH` training texts, one per line; repeat for each language.
    #[arg(long, value_name = "LANG=PATH")]
    pub langid_train: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub langid_min_texts: usize,
    /// Write the identifier trained from --langid-train here.
    #[arg(long, requires = "langid_train")]
    pub save_langid: Option<PathBuf>,
    #[arg(long, requires = "out_tgt", conflicts_with = "out_tsv")]
    pub out_src: Option<PathBuf>,
    #[arg(long, requires = "out_src")]
    pub out_tgt: Option<PathBuf>,
    #[arg(long)]
    pub out_tsv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VariantCommand {
    /// Translate every text field through a pipeline such as BT-FI or MT-ES.
    Build(VariantBuildArgs),
    /// Send a canary batch through a backend and check what comes back.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct VariantBuildArgs {
    #[arg(long, default_value_t = Task::Nli)]
    pub task: Task,
    /// Pipeline name: BT-XX round-trips through XX, MT-XX translates once.
    #[arg(long, alias = "pipeline")]
    pub spec: String,
    /// `cmd: <shell template with {src} {tgt}>` or `table: <path>`.
    #[arg(long)]
    pub backend: String,
    /// Decoding metadata recorded with the run, `key=value,...`.
    #[arg(long, default_value = "")]
    pub decoding: String,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Translation cache journal (default: translations.tsv inside
    /// $TRANSART_CACHE_DIR, or no persistent cache).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Language of the input records (default: taken from the records).
    #[arg(long)]
    pub source_lang: Option<LanguageTag>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SelfcheckArgs {
    #[arg(long)]
    pub backend: String,
    #[arg(long, default_value = "en>fi")]
    pub direction: Direction,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Where sentence pairs come from. Exactly one source must be given.
#[derive(Debug, Args, Serialize)]
pub struct BitextArgs {
    #[arg(long, requires = "tgt")]
    pub src: Option<PathBuf>,
    #[arg(long, requires = "src")]
    pub tgt: Option<PathBuf>,
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    /// QA dataset whose contexts form the source side.
    #[arg(long, requires = "translated")]
    pub qa: Option<PathBuf>,
    /// Translated QA records (from `variant build --task qa`) for --qa.
    #[arg(long, requires = "qa")]
    pub translated: Option<PathBuf>,
    #[arg(long, default_value_t = Tokenizer::Default)]
    pub tokenizer: Tokenizer,
}

#[derive(Debug, Subcommand)]
pub enum AlignCommand {
    /// Train forward (and optionally reverse) alignment models.
    Train(AlignTrainArgs),
    /// Viterbi-align pairs, symmetrizing when a reverse model is given.
    Viterbi(AlignViterbiArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AlignTrainArgs {
    #[command(flatten)]
    pub bitext: BitextArgs,
    /// Extra training pairs that are not aligned themselves.
    #[arg(long, requires = "aux_tgt", conflicts_with = "aux_tsv")]
    pub aux_src: Option<PathBuf>,
    #[arg(long, requires = "aux_src")]
    pub aux_tgt: Option<PathBuf>,
    #[arg(long)]
    pub aux_tsv: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub ibm1_iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub diagonal_iterations: usize,
    #[arg(long, default_value_t = 4.0)]
    pub tension: f64,
    #[arg(long, default_value_t = 0.08)]
    pub p0: f64,
    #[arg(long, default_value_t = 8)]
    pub tension_steps: usize,
    #[arg(long, default_value_t = 14.0)]
    pub max_tension: f64,
    /// Keep the tension at its initial value.
    #[arg(long)]
    pub fixed_tension: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub vocab_limit: usize,
    #[arg(long)]
    pub src_lang: Option<LanguageTag>,
    #[arg(long)]
    pub tgt_lang: Option<LanguageTag>,
    /// Output path of the source-to-target model.
    #[arg(long)]
    pub forward: PathBuf,
    /// Also train the target-to-source model and write it here.
    #[arg(long)]
    pub reverse: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AlignViterbiArgs {
    #[command(flatten)]
    pub bitext: BitextArgs,
    /// Source-to-target model.
    #[arg(long)]
    pub forward: PathBuf,
    /// Target-to-source model; enables symmetrization.
    #[arg(long)]
    pub reverse: Option<PathBuf>,
    #[arg(long, default_value_t = Symmetrization::GrowDiagFinalAnd)]
    pub symmetrize: Symmetrization,
    /// Pharaoh output, one line per pair.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MapSpansArgs {
    #[arg(long, default_value_t = MapMode::Discard)]
    pub mode: MapMode,
    /// Pharaoh alignments between source and translated contexts.
    #[arg(long)]
    pub alignments: PathBuf,
    /// Translated records (.jsonl) or translated contexts, one per line.
    #[arg(long)]
    pub translated: PathBuf,
    /// Language of plain-text translated contexts.
    #[arg(long)]
    pub tgt_lang: Option<LanguageTag>,
    #[arg(long, default_value_t = Tokenizer::Default)]
    pub tokenizer: Tokenizer,
    #[arg(long)]
    pub report: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Premise/hypothesis lexical overlap by label, provenance and language.
    Overlap(OverlapArgs),
    /// Predicted class distribution per system and language.
    Classes(ClassesArgs),
    /// Token-length statistics by field, label and provenance.
    Lengths(LengthsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct OverlapArgs {
    #[arg(long, default_value_t = Tokenizer::Default)]
    pub tokenizer: Tokenizer,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// NLI datasets as `NAME=PATH` or `PATH` (named by file stem).
    #[arg(required = true)]
    pub datasets: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassesArgs {
    /// `SYSTEM:LANG=PATH`; repeat for every row of the table.
    #[arg(long, required = true, value_name = "SYSTEM:LANG=PATH")]
    pub preds: Vec<String>,
    #[arg(long, default_value = "entailment,neutral,contradiction")]
    pub labels: String,
    /// Comma-separated bias added to every logits vector.
    #[arg(long)]
    pub bias: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LengthsArgs {
    #[arg(long, default_value_t = Task::Nli)]
    pub task: Task,
    #[arg(long, default_value_t = Tokenizer::Default)]
    pub tokenizer: Tokenizer,
    #[arg(long)]
    pub report: Option<PathBuf>,
    pub input: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// `label=weight,...` with weights renormalized, or `uniform`.
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "entailment,neutral,contradiction")]
    pub labels: String,
    /// Predictions the biases are fitted on, calibrated per (seed, epoch).
    #[arg(long)]
    pub fit: PathBuf,
    /// Predictions the fitted biases are applied to.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    /// Biased logits of the --apply set (or the --fit set without --apply).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.005)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 50)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// NLI accuracy per (seed, epoch), optionally per language or group.
    Nli(EvalNliArgs),
    /// QA F1 and exact match.
    Qa(EvalQaArgs),
    /// Mean and population standard deviation across seeds.
    Aggregate(AggregateArgs),
    /// Best epoch per system and seed by average accuracy.
    Checkpoint(CheckpointArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EvalNliArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long, default_value = "entailment,neutral,contradiction")]
    pub labels: String,
    /// Row name in the result table (default: predictions file stem).
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub per_language: bool,
    /// Gold field to break accuracy down by, e.g. genre or category.
    #[arg(long)]
    pub group_by: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalQaArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub preds: PathBuf,
    /// Only score this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only score this epoch.
    #[arg(long)]
    pub epoch: Option<u32>,
    /// Do not drop English articles during normalization.
    #[arg(long)]
    pub keep_articles: bool,
    /// Strip ASCII punctuation only.
    #[arg(long)]
    pub ascii_punctuation: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// NLI reports or result tables; rows are matched across seeds.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckpointArgs {
    /// Columns to average (default: every column of the row).
    #[arg(long, value_delimiter = ',')]
    pub languages: Option<Vec<String>>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    pub input: PathBuf,
    /// Write the text here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
