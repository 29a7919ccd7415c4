use serde::Serialize;

use resbench_core::ranking::{avg_rank, per_benchmark_ranks, ranks_from_scores, ItemFilter, RankVector};
use resbench_core::sampler::SampleSet;

use super::{load_scores, load_store};
use crate::args::{Format, RankArgs};
use crate::error::{CliError, CliResult, Context};
use crate::output::{csv_rows, Output};

#[derive(Serialize)]
struct RankReport {
    avg_rank: RankVector,
    per_benchmark: Vec<RankVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subset: Option<RankVector>,
}

pub fn run(args: &RankArgs, mut out: Output) -> CliResult<Output> {
    let store = load_store(&args.store.embeddings)?;
    let scores = load_scores(&args.scores)?;
    let per_benchmark = per_benchmark_ranks(&scores, &store)?;
    let overall = avg_rank(&per_benchmark)?;
    let subset = match &args.sample {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::config(format!("sample file {} does not exist", path.display())));
            }
            let sample = SampleSet::read_json(path).in_file(path)?;
            sample.check_against(&store).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            Some(ranks_from_scores(&scores, ItemFilter::Items(&sample.item_ids), "subset")?)
        }
        None => None,
    };

    match out.format {
        Format::Json => out.json(
            "ranks.json",
            &RankReport {
                avg_rank: overall.clone(),
                per_benchmark,
                subset,
            },
        )?,
        Format::Csv => {
            out.csv("avg_rank.csv", |w| overall.write_csv(w))?;
            let mut header = vec!["model".to_string()];
            header.extend(per_benchmark.iter().map(|r| r.source.clone()));
            header.push(overall.source.clone());
            let rows: Vec<Vec<String>> = overall
                .models
                .iter()
                .enumerate()
                .map(|(m, model)| {
                    let mut row = vec![model.clone()];
                    row.extend(per_benchmark.iter().map(|r| r.ranks[m].to_string()));
                    row.push(overall.ranks[m].to_string());
                    row
                })
                .collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out.csv("benchmark_ranks.csv", |w| csv_rows(w, &header, &rows))?;
            if let Some(s) = &subset {
                out.csv("subset_rank.csv", |w| s.write_csv(w))?;
            }
        }
    }
    for (model, rank) in overall.ordered().iter().take(5) {
        eprintln!("{rank:>8.3}  {model}");
    }
    Ok(out)
}
