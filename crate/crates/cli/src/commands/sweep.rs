use resbench_core::experiment::sweep_budgets;
use resbench_core::sampler::Strategy;

use super::{candidates, context, distance, fmt_opt, load_scores, load_store, strategy};
use crate::args::{Format, SweepArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv_rows, Output};

pub fn run(args: &SweepArgs, seed: u64, mut out: Output) -> CliResult<Output> {
    let store = load_store(&args.store.embeddings)?;
    let scores = load_scores(&args.scores)?;
    if args.repeats == 0 || args.budgets.is_empty() || args.budgets.contains(&0) {
        return Err(CliError::config("--repeats and every --budgets entry must be at least 1"));
    }
    let ctx = context(&store, &scores, args.reference.as_deref())?;
    let pool = match &args.benchmarks {
        Some(list) => Some(candidates(&store, Some(list))?),
        None => None,
    };
    let strategies: Vec<Strategy> = args.strategies.iter().map(|&s| strategy(s)).collect();
    let report = sweep_budgets(
        &ctx,
        pool.as_ref(),
        &args.budgets,
        &strategies,
        args.repeats,
        seed,
        distance(&args.distance),
    )?;

    for c in &report.cells {
        let flag = if c.low_information { "  (low information)" } else { "" };
        eprintln!("{:<7} {:>6}  {}{flag}", c.strategy.label(), c.budget, c.summary.display());
    }
    match out.format {
        Format::Json => out.json("sweep.json", &report)?,
        Format::Csv => {
            out.csv("sweep.csv", |w| report.write_csv(w))?;
            let rows: Vec<Vec<String>> = report
                .cells
                .iter()
                .map(|c| {
                    vec![
                        c.strategy.label().to_string(),
                        c.budget.to_string(),
                        fmt_opt(c.summary.mean),
                        fmt_opt(c.summary.std),
                        c.summary.display(),
                        c.low_information.to_string(),
                    ]
                })
                .collect();
            out.csv("sweep_summary.csv", |w| {
                csv_rows(w, &["strategy", "budget", "mean", "std", "display", "low_information"], &rows)
            })?;
        }
    }
    Ok(out)
}
