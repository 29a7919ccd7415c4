use std::collections::BTreeMap;

use serde::Serialize;

use resbench_core::corpus::Part;
use resbench_core::sampler::{
    coverage_radius, fps_sample_in, per_benchmark_ratio, random_proportional_sample_in,
    BenchmarkRatio, SampleSet, Strategy,
};

use super::{candidates, distance, load_store, strategy};
use crate::args::{Format, SampleArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv_rows, Output};

#[derive(Serialize)]
struct SampleReport {
    strategy: Strategy,
    requested_budget: usize,
    sampled: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage_radius: Option<f64>,
    ratios: BTreeMap<String, BenchmarkRatio>,
}

pub fn run(args: &SampleArgs, seed: u64, mut out: Output) -> CliResult<Output> {
    let full = load_store(&args.store.embeddings)?;
    if args.budget == 0 {
        return Err(CliError::config("--budget must be at least 1"));
    }
    let store = match &args.parts {
        Some(spec) => {
            let parts = Part::parse_set(spec).map_err(|e| CliError::config(format!("--parts: {e}")))?;
            full.select_parts(&parts)?
        }
        None => full,
    };
    let pool = candidates(&store, args.benchmarks.as_deref())?;
    let dist = distance(&args.distance);
    let budget = if args.budget > pool.len() {
        eprintln!(
            "warning: budget {} exceeds the {} candidate items; sampling all {}",
            args.budget,
            pool.len(),
            pool.len()
        );
        pool.len()
    } else {
        args.budget
    };
    let start = match &args.start_item {
        Some(id) => Some(
            store
                .items()
                .iter()
                .position(|m| &m.item_id == id)
                .ok_or_else(|| CliError::config(format!("--start-item {id:?} is not in the store")))?,
        ),
        None => None,
    };
    let strategy = strategy(args.strategy);
    let sample: SampleSet = match strategy {
        Strategy::Fps => fps_sample_in(&store, &pool, budget, seed, dist, start)?,
        Strategy::RandomProportional => {
            if start.is_some() {
                return Err(CliError::config("--start-item only applies to --strategy fps"));
            }
            random_proportional_sample_in(&store, &pool, budget, seed)?
        }
    };
    let radius = if args.coverage {
        Some(coverage_radius(&store, &sample, dist)?)
    } else {
        None
    };
    let report = SampleReport {
        strategy,
        requested_budget: args.budget,
        sampled: sample.len(),
        coverage_radius: radius,
        ratios: per_benchmark_ratio(&sample, &store)?,
    };

    out.json("sample.json", &sample)?;
    match out.format {
        Format::Json => out.json("sample_report.json", &report)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .ratios
                .iter()
                .map(|(b, r)| vec![b.clone(), r.sampled.to_string(), r.original.to_string(), format!("{:.6}", r.ratio)])
                .collect();
            out.csv("ratios.csv", |w| csv_rows(w, &["benchmark", "sampled", "original", "ratio"], &rows))?;
        }
    }
    match radius {
        Some(r) => eprintln!("sampled {} items ({}), coverage radius {r:.6}", sample.len(), strategy.label()),
        None => eprintln!("sampled {} items ({})", sample.len(), strategy.label()),
    }
    Ok(out)
}
