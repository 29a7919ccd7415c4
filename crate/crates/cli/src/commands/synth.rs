use resbench_core::corpus::{meta_path, write_embeddings};
use resbench_core::synth::{generate_world, WorldSpec};

use crate::args::SynthArgs;
use crate::error::{CliError, CliResult};
use crate::output::{Output, Provenance};

pub fn run(
    args: &SynthArgs,
    seed: Option<u64>,
    provenance: Provenance,
    open: impl FnOnce(Provenance) -> CliResult<Output>,
) -> CliResult<Output> {
    let spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            let mut spec: WorldSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec
        }
        None => {
            let mut spec = WorldSpec::skill_biased(
                args.benchmarks,
                args.items,
                args.dim,
                args.models,
                args.dominance,
                seed.unwrap_or(0),
            );
            if let Some(shape) = args.specialists {
                spec = spec.with_specialists(shape)?;
            }
            spec.noise = args.noise;
            spec
        }
    };
    let world = generate_world(&spec)?;

    // the resolved spec is the configuration that matters, whichever way it was given
    let provenance = Provenance {
        seed: spec.seed,
        ..Provenance::new(&provenance.command, spec.seed, &spec)?
    };
    let mut out = open(provenance)?;
    let emb = out.path("world.emb");
    write_embeddings(&world.store, &emb)?;
    out.note_written(emb.clone());
    out.note_written(meta_path(&emb));
    out.csv("scores.csv", |w| world.scores.write_csv(w))?;
    out.csv("ground_truth.csv", |w| world.ground_truth.write_csv(w))?;
    out.json("world.json", &spec)?;
    eprintln!(
        "generated {} items over {} benchmarks and {} models (seed {})",
        world.store.count(),
        spec.n_benchmarks,
        spec.n_models,
        spec.seed
    );
    Ok(out)
}
