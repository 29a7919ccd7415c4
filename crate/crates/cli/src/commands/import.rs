use std::collections::HashSet;

use serde::Serialize;

use resbench_core::corpus::{write_embeddings, Part};

use super::{load_scores_from, load_store};
use crate::args::{Format, ImportArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv_rows, Output};

#[derive(Serialize)]
struct BenchmarkInventory {
    benchmark: String,
    task_format: String,
    items: usize,
    parts: String,
}

#[derive(Serialize)]
struct ScoreInventory {
    models: usize,
    items: usize,
    missing_cells: usize,
}

#[derive(Serialize)]
struct Inventory {
    count: usize,
    dim: usize,
    benchmarks: Vec<BenchmarkInventory>,
    scores: Option<ScoreInventory>,
}

pub fn run(args: &ImportArgs, mut out: Output) -> CliResult<Output> {
    let store = load_store(&args.store.embeddings)?;
    let scores = match &args.scores {
        Some(path) => {
            let table = load_scores_from(path, args.score_min, args.score_max)?;
            let ids: HashSet<&str> = store.items().iter().map(|m| m.item_id.as_str()).collect();
            if let Some(stray) = table.items().iter().find(|i| !ids.contains(i.as_str())) {
                return Err(CliError::data(format!(
                    "{}: item {stray:?} is not in the embedding store",
                    path.display()
                )));
            }
            Some(table)
        }
        None => None,
    };

    let benchmarks = store
        .rows_by_benchmark()
        .into_iter()
        .map(|(benchmark, rows)| {
            let meta = &store.items()[rows[0]];
            let parts = rows
                .iter()
                .fold(meta.parts.clone(), |acc, &r| acc.intersection(&store.items()[r].parts).copied().collect());
            BenchmarkInventory {
                benchmark,
                task_format: meta.task_format.name().to_string(),
                items: rows.len(),
                parts: Part::combo_label(&parts),
            }
        })
        .collect();
    let score_inventory = scores.as_ref().map(|t| {
        let missing = (0..t.models().len())
            .map(|m| (0..t.items().len()).filter(|&i| t.get(m, i).is_none()).count())
            .sum();
        ScoreInventory {
            models: t.models().len(),
            items: t.items().len(),
            missing_cells: missing,
        }
    });
    let inventory = Inventory {
        count: store.count(),
        dim: store.dim(),
        benchmarks,
        scores: score_inventory,
    };

    let emb = out.path("store.emb");
    write_embeddings(&store, &emb)?;
    out.note_written(resbench_core::corpus::meta_path(&emb));
    out.note_written(emb);
    if let Some(table) = &scores {
        out.csv("scores.csv", |w| table.write_csv(w))?;
    }
    match out.format {
        Format::Json => out.json("inventory.json", &inventory)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = inventory
                .benchmarks
                .iter()
                .map(|b| vec![b.benchmark.clone(), b.task_format.clone(), b.items.to_string(), b.parts.clone()])
                .collect();
            out.csv("inventory.csv", |w| csv_rows(w, &["benchmark", "task_format", "items", "parts"], &rows))?;
        }
    }
    eprintln!(
        "imported {} items ({} benchmarks, dim {})",
        inventory.count,
        inventory.benchmarks.len(),
        inventory.dim
    );
    Ok(out)
}
