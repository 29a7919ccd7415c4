use serde::Serialize;

use resbench_core::corpus::{Part, PartSet};
use resbench_core::probe::{all_combos, available_combos, run_classification_suite, ConfusionMatrix, TrainConfig};

use super::load_store;
use crate::args::{ClassifyArgs, Format};
use crate::error::{CliError, CliResult};
use crate::output::{csv_rows, Output};

#[derive(Serialize)]
struct ComboRow {
    combo: String,
    status: &'static str,
    accuracies: Vec<f64>,
    mean: Option<f64>,
    std: Option<f64>,
    display: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    confusion: Option<ConfusionMatrix>,
}

#[derive(Serialize)]
struct ClassifyReport {
    trials: usize,
    std_kind: &'static str,
    train: TrainConfig,
    classes: Vec<String>,
    combos: Vec<ComboRow>,
}

pub fn run(args: &ClassifyArgs, seed: u64, mut out: Output) -> CliResult<Output> {
    let store = load_store(&args.store.embeddings)?;
    if args.trials == 0 {
        return Err(CliError::config("--trials must be at least 1"));
    }
    let requested: Vec<PartSet> = match &args.combos {
        Some(list) => list
            .iter()
            .map(|c| Part::parse_set(c).map_err(|e| CliError::config(format!("--combos: {e}"))))
            .collect::<CliResult<_>>()?,
        None => all_combos(),
    };
    // explicitly requested combinations must exist; the default table skips absent ones
    let runnable: Vec<PartSet> = if args.combos.is_some() {
        requested.clone()
    } else {
        let available = available_combos(&store);
        requested.iter().filter(|c| available.contains(c)).cloned().collect()
    };
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        ..TrainConfig::default()
    };
    if args.epochs == 0 || args.batch_size == 0 || !args.learning_rate.is_finite() || args.learning_rate <= 0.0 {
        return Err(CliError::config("--epochs, --batch-size and --learning-rate must be positive"));
    }
    if runnable.is_empty() {
        return Err(CliError::data("no part combination is present in every item"));
    }
    let suite = run_classification_suite(&store, &runnable, args.trials, seed, &cfg)?;

    let rows: Vec<ComboRow> = requested
        .iter()
        .map(|combo| match suite.results.iter().find(|r| &r.combo == combo) {
            Some(r) => ComboRow {
                combo: r.label(),
                status: "ok",
                accuracies: r.accuracies.clone(),
                mean: Some(r.mean),
                std: Some(r.std),
                display: r.display(),
                confusion: Some(r.confusion.clone()),
            },
            None => ComboRow {
                combo: Part::combo_label(combo),
                status: "unavailable",
                accuracies: vec![],
                mean: None,
                std: None,
                display: "n/a".into(),
                confusion: None,
            },
        })
        .collect();

    for r in &rows {
        eprintln!("{:<6} {}", r.combo, r.display);
    }
    match out.format {
        Format::Csv => {
            let summary: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.combo.clone(),
                        r.mean.map(|m| format!("{m:.6}")).unwrap_or_default(),
                        r.std.map(|s| format!("{s:.6}")).unwrap_or_default(),
                        r.display.clone(),
                        r.status.to_string(),
                    ]
                })
                .collect();
            out.csv("accuracy_summary.csv", |w| {
                csv_rows(w, &["combo", "mean", "std_population", "display", "status"], &summary)
            })?;
            let trials: Vec<Vec<String>> = rows
                .iter()
                .flat_map(|r| {
                    r.accuracies
                        .iter()
                        .enumerate()
                        .map(|(t, a)| vec![r.combo.clone(), t.to_string(), format!("{a:.6}")])
                        .collect::<Vec<_>>()
                })
                .collect();
            out.csv("accuracy.csv", |w| csv_rows(w, &["combo", "trial", "accuracy"], &trials))?;
            for r in &rows {
                if let Some(cm) = &r.confusion {
                    out.csv(&format!("confusion/{}.csv", r.combo), |w| cm.write_csv(w))?;
                }
            }
        }
        Format::Json => {
            let report = ClassifyReport {
                trials: args.trials,
                std_kind: "population",
                train: cfg,
                classes: store.benchmarks(),
                combos: rows,
            };
            out.json("classify.json", &report)?;
        }
    }
    Ok(out)
}
