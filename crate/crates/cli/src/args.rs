use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "resbench", version, about = "Benchmark provenance probing, FPS resampling and rank correlation")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Master seed for every random choice (default 0; `synth --config` keeps the file's seed unless given).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl Common {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Validate an embedding store (and optionally a score table) and write canonical copies.
    Import(ImportArgs),
    /// Dataset classification: linear probes predicting each item's benchmark.
    Classify(ClassifyArgs),
    /// Draw an FPS or size-proportional random sample.
    Sample(SampleArgs),
    /// Per-benchmark ranks and AvgRank from a score table.
    Rank(RankArgs),
    /// Spearman correlation of benchmarks and resampled subsets with a reference ranking.
    Correlate(CorrelateArgs),
    /// Correlation of FPS and random subsets across budgets.
    Sweep(SweepArgs),
    /// Generate a synthetic world: embedding store, scores and ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct StoreInput {
    /// EMB1 embedding file (its metadata sidecar is `<path>.meta.jsonl`).
    #[arg(long)]
    pub embeddings: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreInput {
    /// Long-format score CSV with columns model,item_id,score[,missing].
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub score_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub score_max: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DistanceArgs {
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    /// L2-normalize rows before measuring distances.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Fps,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct ImportArgs {
    #[command(flatten)]
    pub store: StoreInput,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub score_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub score_max: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub store: StoreInput,
    /// Independent split/train/evaluate runs per combination.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Comma-separated part combinations such as `I,Q+A,I+Q+A`; all seven by default.
    #[arg(long, value_delimiter = ',')]
    pub combos: Option<Vec<String>>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub store: StoreInput,
    #[arg(long, value_enum, default_value_t = StrategyArg::Fps)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub budget: usize,
    /// Restrict distances to these parts, e.g. `I+Q`.
    #[arg(long)]
    pub parts: Option<String>,
    #[command(flatten)]
    pub distance: DistanceArgs,
    /// Pin the first FPS pick to this item id instead of a seeded random start.
    #[arg(long)]
    pub start_item: Option<String>,
    /// Only sample from these benchmarks (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub benchmarks: Option<Vec<String>>,
    /// Also report the coverage radius (max distance of any item to the sample).
    #[arg(long)]
    pub coverage: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    pub store: StoreInput,
    #[command(flatten)]
    pub scores: ScoreInput,
    /// Also rank models on the items of this sample file.
    #[arg(long)]
    pub sample: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub store: StoreInput,
    #[command(flatten)]
    pub scores: ScoreInput,
    /// Reference ranking CSV (`model,rank`); AvgRank over the store's benchmarks by default.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Sample files treated as repeats of one resampled benchmark (repeatable).
    #[arg(long)]
    pub sample: Vec<PathBuf>,
    /// Name of the resampled row.
    #[arg(long, default_value = "Resampled")]
    pub label: String,
    /// Also run the upper/lower-half source split at `--budget`.
    #[arg(long)]
    pub split_halves: bool,
    /// Also FPS-filter `--budget` items out of this benchmark.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [StrategyArg::Fps, StrategyArg::Random])]
    pub strategies: Vec<StrategyArg>,
    #[command(flatten)]
    pub distance: DistanceArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub store: StoreInput,
    #[command(flatten)]
    pub scores: ScoreInput,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 250, 500, 1000])]
    pub budgets: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [StrategyArg::Fps, StrategyArg::Random])]
    pub strategies: Vec<StrategyArg>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Only sample from these benchmarks (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub benchmarks: Option<Vec<String>>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub distance: DistanceArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// World spec JSON; the preset flags below are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub benchmarks: usize,
    #[arg(long, default_value_t = 1000)]
    pub items: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 20)]
    pub models: usize,
    /// Weight each benchmark puts on its own skill.
    #[arg(long, default_value_t = 0.5)]
    pub dominance: f64,
    /// Beta(a, a) shape for model skills; below 1 gives specialist models.
    #[arg(long)]
    pub specialists: Option<f64>,
    /// Probability of flipping each outcome.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}
