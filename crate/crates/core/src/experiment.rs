//! Subset evaluation studies: how well model ranks measured on a sampled subset
//! agree with the AvgRank over all benchmarks.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, ScoreTable};
use crate::ranking::{
    avg_rank, correlate_all, mean_std, per_benchmark_ranks, ranks_from_scores, spearman_ranks,
    split_upper_lower, CorrelationReport, ItemFilter, RankVector,
};
use crate::sampler::{
    fps_sample_in, random_proportional_sample_in, Candidates, DistanceConfig, SampleSet, Strategy,
};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Store, scores and the reference ranking subsets are compared against.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    pub store: &'a EmbeddingStore,
    pub scores: &'a ScoreTable,
    pub per_benchmark: Vec<RankVector>,
    pub reference: RankVector,
}

impl<'a> EvalContext<'a> {
    /// Uses the AvgRank over every benchmark of the store as reference.
    pub fn new(store: &'a EmbeddingStore, scores: &'a ScoreTable) -> Result<Self> {
        let per_benchmark = per_benchmark_ranks(scores, store)?;
        let reference = avg_rank(&per_benchmark)?;
        Ok(EvalContext {
            store,
            scores,
            per_benchmark,
            reference,
        })
    }

    pub fn with_reference(mut self, reference: RankVector) -> Result<Self> {
        reference.aligned_to(self.scores.models())?;
        self.reference = reference;
        Ok(self)
    }

    /// Each benchmark's correlation with the reference, best first.
    pub fn benchmark_correlations(&self) -> Result<CorrelationReport> {
        correlate_all(&self.per_benchmark, &self.reference)
    }

    pub fn subset_ranks(&self, sample: &SampleSet, source: &str) -> Result<RankVector> {
        ranks_from_scores(self.scores, ItemFilter::Items(&sample.item_ids), source)
    }

    /// Correlation of subset ranks with the reference; `None` when the subset
    /// cannot separate the models at all.
    pub fn subset_rho(&self, sample: &SampleSet) -> Result<Option<f64>> {
        let ranks = self.subset_ranks(sample, "subset")?;
        match spearman_ranks(&self.reference, &ranks) {
            Ok(rho) => Ok(Some(rho)),
            Err(Error::Undefined(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

pub fn draw(
    store: &EmbeddingStore,
    candidates: &Candidates,
    strategy: Strategy,
    budget: usize,
    seed: u64,
    dist: DistanceConfig,
) -> Result<SampleSet> {
    match strategy {
        Strategy::Fps => fps_sample_in(store, candidates, budget, seed, dist, None),
        Strategy::RandomProportional => {
            random_proportional_sample_in(store, candidates, budget, seed)
        }
    }
}

/// Mean and population standard deviation over the defined values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub values: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Summary {
    pub fn from_values(values: Vec<Option<f64>>) -> Self {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        let (mean, std) = if defined.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&defined);
            (Some(m), Some(s))
        };
        Summary { values, mean, std }
    }

    pub fn undefined(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// `0.969±0.006`, or `n/a` when nothing was defined.
    pub fn display(&self) -> String {
        match (self.mean, self.std) {
            (Some(m), Some(s)) => format!("{m:.3}±{s:.3}"),
            _ => "n/a".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub strategy: Strategy,
    pub budget: usize,
    pub repeat: usize,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub strategy: Strategy,
    pub budget: usize,
    pub summary: Summary,
    /// Some repeat could not rank the models meaningfully (undefined rho or at
    /// most two distinct subset scores).
    pub low_information: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub repeats: usize,
    pub records: Vec<SweepRecord>,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, strategy: Strategy, budget: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.budget == budget)
    }

    /// `strategy,budget,repeat,rho` with an empty rho for undefined repeats.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["strategy", "budget", "repeat", "rho"])?;
        for r in &self.records {
            w.write_record([
                r.strategy.label().to_string(),
                r.budget.to_string(),
                r.repeat.to_string(),
                r.rho.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

fn distinct_scores(ctx: &EvalContext<'_>, sample: &SampleSet) -> Result<usize> {
    let means = crate::ranking::model_means(ctx.scores, ItemFilter::Items(&sample.item_ids))?;
    let set: BTreeSet<u64> = means.iter().map(|m| m.to_bits()).collect();
    Ok(set.len())
}

/// For every `(strategy, budget)` draw `repeats` subsets and correlate their
/// ranks with the reference. Repeat `r` uses the same derived seed for every
/// strategy and budget.
pub fn sweep_budgets(
    ctx: &EvalContext<'_>,
    candidates: Option<&Candidates>,
    budgets: &[usize],
    strategies: &[Strategy],
    repeats: usize,
    seed: u64,
    dist: DistanceConfig,
) -> Result<SweepReport> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let all = Candidates::all(ctx.store);
    let candidates = candidates.unwrap_or(&all);
    if let Some(&b) = budgets.iter().find(|&&b| b > candidates.len()) {
        return Err(Error::BudgetTooLarge {
            budget: b,
            available: candidates.len(),
        });
    }
    let n_models = ctx.scores.models().len();
    let jobs: Vec<(Strategy, usize, usize)> = strategies
        .iter()
        .flat_map(|&s| budgets.iter().flat_map(move |&b| (0..repeats).map(move |r| (s, b, r))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(strategy, budget, repeat)| {
            let sample = draw(ctx.store, candidates, strategy, budget, derive_seed(seed, repeat as u64), dist)?;
            let rho = ctx.subset_rho(&sample)?;
            let thin = distinct_scores(ctx, &sample)? < n_models.min(3);
            Ok((
                SweepRecord {
                    strategy,
                    budget,
                    repeat,
                    rho,
                },
                thin,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let cells = results
        .chunks(repeats)
        .map(|chunk| {
            let first = &chunk[0].0;
            SweepCell {
                strategy: first.strategy,
                budget: first.budget,
                summary: Summary::from_values(chunk.iter().map(|(r, _)| r.rho).collect()),
                low_information: chunk.iter().any(|(r, thin)| *thin || r.rho.is_none()),
            }
        })
        .collect();
    Ok(SweepReport {
        seed,
        repeats,
        records: results.into_iter().map(|(r, _)| r).collect(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSplitRow {
    pub strategy: Strategy,
    pub upper: Summary,
    pub lower: Summary,
    pub all: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSplitReport {
    pub budget: usize,
    pub trials: usize,
    pub upper: Vec<String>,
    pub lower: Vec<String>,
    pub rows: Vec<SourceSplitRow>,
}

impl SourceSplitReport {
    pub fn row(&self, strategy: Strategy) -> Option<&SourceSplitRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    /// Three-column table: `strategy,Upper Half,Lower Half,All`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["strategy", "Upper Half", "Lower Half", "All"])?;
        for r in &self.rows {
            w.write_record([
                r.strategy.label().to_string(),
                r.upper.display(),
                r.lower.display(),
                r.all.display(),
            ])?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Splits benchmarks into the better- and worse-correlated halves and samples
/// `budget` items from each half and from everything.
pub fn source_split_sweep(
    ctx: &EvalContext<'_>,
    budget: usize,
    strategies: &[Strategy],
    trials: usize,
    seed: u64,
    dist: DistanceConfig,
) -> Result<SourceSplitReport> {
    let (upper, lower) = split_upper_lower(&ctx.benchmark_correlations()?)?;
    let pools = [
        Candidates::benchmarks(ctx.store, &upper)?,
        Candidates::benchmarks(ctx.store, &lower)?,
        Candidates::all(ctx.store),
    ];
    let rows = strategies
        .iter()
        .map(|&strategy| {
            let mut summaries = pools
                .iter()
                .map(|pool| {
                    let report =
                        sweep_budgets(ctx, Some(pool), &[budget], &[strategy], trials, seed, dist)?;
                    Ok(report.cells[0].summary.clone())
                })
                .collect::<Result<Vec<Summary>>>()?
                .into_iter();
            let mut next = || summaries.next().expect("three pools");
            Ok(SourceSplitRow {
                strategy,
                upper: next(),
                lower: next(),
                all: next(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SourceSplitReport {
        budget,
        trials,
        upper,
        lower,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub benchmark: String,
    pub budget: usize,
    pub unfiltered_rho: f64,
    pub filtered: Summary,
}

/// FPS-filters `budget` items out of one benchmark and compares the subset's
/// correlation with that of the whole benchmark.
pub fn filter_benchmark(
    ctx: &EvalContext<'_>,
    benchmark: &str,
    budget: usize,
    trials: usize,
    seed: u64,
    dist: DistanceConfig,
) -> Result<FilterReport> {
    let whole = ctx
        .per_benchmark
        .iter()
        .find(|r| r.source == benchmark)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown benchmark {benchmark:?}")))?;
    let unfiltered_rho = spearman_ranks(&ctx.reference, whole)?;
    let pool = Candidates::benchmarks(ctx.store, &[benchmark.to_string()])?;
    let report = sweep_budgets(ctx, Some(&pool), &[budget], &[Strategy::Fps], trials, seed, dist)?;
    Ok(FilterReport {
        benchmark: benchmark.to_string(),
        budget,
        unfiltered_rho,
        filtered: report.cells[0].summary.clone(),
    })
}
