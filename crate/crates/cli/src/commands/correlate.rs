use serde::Serialize;

use resbench_core::experiment::{filter_benchmark, source_split_sweep, FilterReport, SourceSplitReport};
use resbench_core::ranking::{correlate_repeated, spearman_ranks, CorrelationEntry, CorrelationReport};
use resbench_core::sampler::{SampleSet, Strategy};

use super::{context, distance, load_scores, load_store, strategy};
use crate::args::{CorrelateArgs, Format};
use crate::error::{CliError, CliResult, Context};
use crate::output::{csv_rows, Output};

#[derive(Serialize)]
struct CorrelateReport {
    correlations: CorrelationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    split_halves: Option<SourceSplitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter: Option<FilterReport>,
}

pub fn run(args: &CorrelateArgs, seed: u64, mut out: Output) -> CliResult<Output> {
    let store = load_store(&args.store.embeddings)?;
    let scores = load_scores(&args.scores)?;
    let ctx = context(&store, &scores, args.reference.as_deref())?;
    let dist = distance(&args.distance);
    if (args.split_halves || args.filter.is_some()) && (args.budget == 0 || args.trials == 0) {
        return Err(CliError::config("--budget and --trials must be at least 1"));
    }

    let mut report = ctx.benchmark_correlations()?;
    report.push(CorrelationEntry {
        source: ctx.reference.source.clone(),
        rho: spearman_ranks(&ctx.reference, &ctx.reference)?,
        std: None,
        repeats: 1,
    });
    if !args.sample.is_empty() {
        let mut subsets = Vec::with_capacity(args.sample.len());
        for path in &args.sample {
            if !path.exists() {
                return Err(CliError::config(format!("sample file {} does not exist", path.display())));
            }
            let sample = SampleSet::read_json(path).in_file(path)?;
            sample.check_against(&store).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            subsets.push(ctx.subset_ranks(&sample, &args.label)?);
        }
        let entry = if subsets.len() == 1 {
            CorrelationEntry {
                source: args.label.clone(),
                rho: spearman_ranks(&ctx.reference, &subsets[0])?,
                std: None,
                repeats: 1,
            }
        } else {
            correlate_repeated(args.label.clone(), &subsets, &ctx.reference)?
        };
        report.push(entry);
    }

    let strategies: Vec<Strategy> = args.strategies.iter().map(|&s| strategy(s)).collect();
    let split = if args.split_halves {
        Some(source_split_sweep(&ctx, args.budget, &strategies, args.trials, seed, dist)?)
    } else {
        None
    };
    let filter = match &args.filter {
        Some(bench) => Some(filter_benchmark(&ctx, bench, args.budget, args.trials, seed, dist)?),
        None => None,
    };

    for e in &report.entries {
        eprintln!("{:>12}  {}", e.display(), e.source);
    }
    match out.format {
        Format::Json => out.json(
            "correlations.json",
            &CorrelateReport {
                correlations: report,
                split_halves: split,
                filter,
            },
        )?,
        Format::Csv => {
            out.csv("correlations.csv", |w| report.write_csv(w))?;
            if let Some(s) = &split {
                out.csv("split_halves.csv", |w| s.write_csv(w))?;
            }
            if let Some(f) = &filter {
                let row = vec![
                    f.benchmark.clone(),
                    f.budget.to_string(),
                    f.unfiltered_rho.to_string(),
                    f.filtered.mean.map(|m| m.to_string()).unwrap_or_default(),
                    f.filtered.std.map(|s| s.to_string()).unwrap_or_default(),
                    f.filtered.display(),
                ];
                out.csv("filter.csv", |w| {
                    csv_rows(
                        w,
                        &["benchmark", "budget", "unfiltered_rho", "filtered_mean", "filtered_std", "filtered_display"],
                        &[row],
                    )
                })?;
            }
        }
    }
    Ok(out)
}
