mod classify;
mod correlate;
mod import;
mod rank;
mod sample;
mod sweep;
mod synth;

use std::path::Path;

use resbench_core::corpus::{read_embeddings, EmbeddingStore, ScoreRange, ScoreTable};
use resbench_core::experiment::EvalContext;
use resbench_core::ranking::{RankVector, AVG_RANK};
use resbench_core::sampler::{Candidates, DistanceConfig, Metric, Strategy};

use crate::args::{Cli, Command, DistanceArgs, MetricArg, ScoreInput, StrategyArg};
use crate::error::{CliError, CliResult, Context};
use crate::output::{Output, Provenance};

/// Runs the parsed command and returns the files it wrote.
pub fn run(cli: &Cli) -> CliResult<Vec<std::path::PathBuf>> {
    let name = command_name(&cli.command);
    let seed = cli.common.seed();
    let provenance = Provenance::new(name, seed, &(&cli.common, &cli.command))?;
    let open = |p: Provenance| Output::create(&cli.common.out, cli.common.format, p);
    let out = match &cli.command {
        Command::Import(a) => import::run(a, open(provenance)?)?,
        Command::Classify(a) => classify::run(a, seed, open(provenance)?)?,
        Command::Sample(a) => sample::run(a, seed, open(provenance)?)?,
        Command::Rank(a) => rank::run(a, open(provenance)?)?,
        Command::Correlate(a) => correlate::run(a, seed, open(provenance)?)?,
        Command::Sweep(a) => sweep::run(a, seed, open(provenance)?)?,
        Command::Synth(a) => synth::run(a, cli.common.seed, provenance, open)?,
    };
    Ok(out.written().to_vec())
}

pub fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Import(_) => "import",
        Command::Classify(_) => "classify",
        Command::Sample(_) => "sample",
        Command::Rank(_) => "rank",
        Command::Correlate(_) => "correlate",
        Command::Sweep(_) => "sweep",
        Command::Synth(_) => "synth",
    }
}

fn load_store(path: &Path) -> CliResult<EmbeddingStore> {
    if !path.exists() {
        return Err(CliError::config(format!("embedding file {} does not exist", path.display())));
    }
    read_embeddings(path).in_file(path)
}

fn score_range(min: f64, max: f64) -> CliResult<ScoreRange> {
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(CliError::config(format!("invalid score range [{min}, {max}]")));
    }
    Ok(ScoreRange { min, max })
}

fn load_scores_from(path: &Path, min: f64, max: f64) -> CliResult<ScoreTable> {
    let range = score_range(min, max)?;
    if !path.exists() {
        return Err(CliError::config(format!("score file {} does not exist", path.display())));
    }
    ScoreTable::read_csv_path(path, range).in_file(path)
}

fn load_scores(input: &ScoreInput) -> CliResult<ScoreTable> {
    load_scores_from(&input.scores, input.score_min, input.score_max)
}

fn load_reference(path: &Path) -> CliResult<RankVector> {
    if !path.exists() {
        return Err(CliError::config(format!("reference file {} does not exist", path.display())));
    }
    RankVector::read_csv_path(path, AVG_RANK).in_file(path)
}

/// Evaluation context, optionally against an external reference ranking.
fn context<'a>(
    store: &'a EmbeddingStore,
    scores: &'a ScoreTable,
    reference: Option<&Path>,
) -> CliResult<EvalContext<'a>> {
    let ctx = EvalContext::new(store, scores)?;
    Ok(match reference {
        Some(path) => ctx.with_reference(load_reference(path)?).in_file(path)?,
        None => ctx,
    })
}

fn distance(args: &DistanceArgs) -> DistanceConfig {
    DistanceConfig {
        metric: match args.metric {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Cosine => Metric::Cosine,
        },
        normalize: args.normalize,
    }
}

fn strategy(arg: StrategyArg) -> Strategy {
    match arg {
        StrategyArg::Fps => Strategy::Fps,
        StrategyArg::Random => Strategy::RandomProportional,
    }
}

fn candidates(store: &EmbeddingStore, benchmarks: Option<&[String]>) -> CliResult<Candidates> {
    Ok(match benchmarks {
        Some(list) => Candidates::benchmarks(store, list)?,
        None => Candidates::all(store),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
