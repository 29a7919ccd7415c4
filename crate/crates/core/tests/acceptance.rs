//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p resbench-core --test acceptance`; exits non-zero on any failure.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use resbench_core::corpus::{
    meta_path, read_embeddings, write_embeddings, EmbeddingStore, ItemMeta, Part, PartSet,
    TaskFormat,
};
use resbench_core::experiment::{filter_benchmark, source_split_sweep, sweep_budgets};
use resbench_core::probe::{
    evaluate_probe, loss, loss_and_gradient, make_split, train_probe, ProbeModel, TrainConfig,
};
use resbench_core::ranking::{spearman, RankVector, AVG_RANK};
use resbench_core::sampler::{
    fps_sample, DistanceConfig, FpsState, Metric, Points, Strategy,
};
use resbench_core::synth::{generate_world, ItemCounts, WorldSpec};
use resbench_core::Error;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaussian(r: &mut impl Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Store with one benchmark per entry of `centers`, `per_class` items each, drawn
/// as `center + sigma * N(0, I)` in `dim` dimensions (centers padded with zeros).
fn gaussian_store(centers: &[Vec<f64>], sigma: f64, dim: usize, per_class: usize, seed: u64) -> EmbeddingStore {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    let mut items = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for i in 0..per_class {
            for d in 0..dim {
                let mu = center.get(d).copied().unwrap_or(0.0);
                data.push((mu + sigma * gaussian(&mut r)) as f32);
            }
            items.push(ItemMeta::with_layout(
                format!("c{c}-{i}"),
                format!("class-{c}"),
                TaskFormat::Vqa,
                &[(Part::Image, dim)],
            ));
        }
    }
    EmbeddingStore::new(dim, data, items).expect("valid store")
}

fn one_part_store(dim: usize, data: Vec<f32>) -> EmbeddingStore {
    let n = data.len() / dim;
    let items = (0..n)
        .map(|i| ItemMeta::with_layout(format!("it{i}"), format!("b{}", i % 3), TaskFormat::Mcq, &[(Part::Image, dim)]))
        .collect();
    EmbeddingStore::new(dim, data, items).expect("valid store")
}

/// Textbook greedy farthest point sampling: every step recomputes each
/// candidate's distance to the whole selection from scratch.
fn brute_force_fps(store: &EmbeddingStore, budget: usize, seed: u64, dist: DistanceConfig) -> Vec<usize> {
    let n = store.count();
    let unit = dist.normalize || dist.metric == Metric::Cosine;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let v: Vec<f64> = store.row(i).iter().map(|&x| f64::from(x)).collect();
            if unit {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            } else {
                v
            }
        })
        .collect();
    let d = |a: usize, b: usize| -> f64 {
        match dist.metric {
            Metric::Euclidean => rows[a].iter().zip(&rows[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Cosine => (1.0 - rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum::<f64>()).max(0.0),
        }
    };
    let mut selected = vec![ChaCha8Rng::seed_from_u64(seed).random_range(0..n)];
    while selected.len() < budget.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|i| !selected.contains(i)) {
            let gap = selected.iter().map(|&s| d(i, s)).fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((i, gap));
            }
        }
        selected.push(best.expect("unselected point").0);
    }
    selected
}

fn fps_oracle_equivalence() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(0xF0);
    let stores = 60;
    for case in 0..stores {
        let n = r.random_range(2..=200);
        let dim = r.random_range(1..=16);
        // every third store uses a small integer lattice so ties and duplicates occur
        let lattice = case % 3 == 0;
        let data: Vec<f32> = (0..n * dim)
            .map(|_| if lattice { r.random_range(1..=3) as f32 } else { gaussian(&mut r) as f32 })
            .collect();
        let store = one_part_store(dim, data);
        let dist = match case % 4 {
            0 | 1 => DistanceConfig::default(),
            2 => DistanceConfig { metric: Metric::Cosine, normalize: false },
            _ => DistanceConfig { metric: Metric::Euclidean, normalize: true },
        };
        let budget = r.random_range(1..=n + 5);
        let seed = r.random();
        let got = fps_sample(&store, budget, seed, dist).map_err(|e| e.to_string())?;
        let want = brute_force_fps(&store, budget, seed, dist);
        ensure(got.indices == want, || {
            format!("store {case} (n={n}, dim={dim}, {dist:?}) diverges from the oracle")
        })?;
    }
    Ok(format!("{stores} random stores (n<=200, dim<=16) match the brute-force oracle exactly"))
}

fn fps_invariants() -> Outcome {
    let n = 5000;
    let dim = 16;
    let mut r = ChaCha8Rng::seed_from_u64(0x5000);
    let data: Vec<f32> = (0..n * dim).map(|_| gaussian(&mut r) as f32).collect();
    let store = one_part_store(dim, data);
    let dist = DistanceConfig::default();
    let all: Vec<usize> = (0..n).collect();
    let points = Points::new(&store, &all, dist).map_err(|e| e.to_string())?;
    let budget = 120;
    for seed in 0..20u64 {
        let full = fps_sample(&store, budget, seed, dist).map_err(|e| e.to_string())?;
        for k in [1, 2, 3, 10, 59, 60, 119] {
            let shorter = fps_sample(&store, k, seed, dist).map_err(|e| e.to_string())?;
            let next = fps_sample(&store, k + 1, seed, dist).map_err(|e| e.to_string())?;
            ensure(next.indices[..k] == shorter.indices[..] && full.indices[..k] == shorter.indices[..], || {
                format!("seed {seed}: budget {k} is not a prefix of budget {}", k + 1)
            })?;
        }
        let mut state = FpsState::new(&points, full.indices[0]).map_err(|e| e.to_string())?;
        let mut radii = vec![state.coverage_radius()];
        while state.selected().len() < budget {
            let before = state.min_dist().to_vec();
            state.step();
            ensure(state.min_dist().iter().zip(&before).all(|(a, b)| a <= b), || {
                format!("seed {seed}: a min distance increased")
            })?;
            radii.push(state.coverage_radius());
        }
        ensure(state.selected() == &full.indices[..], || format!("seed {seed}: state and sampler disagree"))?;
        let sel = state.selected();
        for t in 1..sel.len() {
            for s in 0..t {
                ensure(points.distance(sel[s], sel[t]) >= radii[t], || {
                    format!("seed {seed}: steps {s} and {t} are closer than the radius after step {t}")
                })?;
            }
        }
    }
    Ok(format!("prefix, min-distance monotonicity and selected-gap hold on 20 runs over {n} items"))
}

fn spearman_closed_form() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(0x5EA);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(2..=50);
        let a: Vec<f64> = (1..=n).map(|v| v as f64).collect();
        let mut b = a.clone();
        b.shuffle(&mut r);
        let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        let nf = n as f64;
        let closed = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        let rho = spearman(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((rho - closed).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e} exceeds 1e-12"))?;
    let hand = spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).map_err(|e| e.to_string())?;
    ensure(hand == 0.6, || format!("[1,2,3,4] vs [2,1,4,3] gave {hand}, expected 0.6"))?;
    Ok(format!("1000 permutations agree within {worst:.1e}; hand example gives {hand}"))
}

fn avg_rank_fixture() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/avg_rank_vlm.csv");
    let ranks = RankVector::read_csv_path(&path, AVG_RANK).map_err(|e| e.to_string())?;
    ensure(ranks.len() == 27, || format!("expected 27 models, found {}", ranks.len()))?;
    ensure(ranks.ranks.iter().all(|r| (1.0..=27.0).contains(r)), || "a rank lies outside [1, 27]".into())?;
    let ordered = ranks.ordered();
    let file_order: Vec<&str> = ranks.models.iter().map(String::as_str).collect();
    let sorted_order: Vec<&str> = ordered.iter().map(|(m, _)| *m).collect();
    ensure(file_order == sorted_order, || "fixture rows are not in ascending rank order".into())?;
    let (top, top_rank) = ordered[0];
    let (bottom, bottom_rank) = ordered[26];
    ensure(top == "Qwen2-VL-7B-Instruct" && top_rank == 3.615, || format!("top is {top} {top_rank}"))?;
    ensure(bottom == "idefics-9b-instruct" && bottom_rank == 25.96, || format!("bottom is {bottom} {bottom_rank}"))?;
    let mut buf = Vec::new();
    ranks.write_csv(&mut buf).map_err(|e| e.to_string())?;
    let again = RankVector::read_csv(buf.as_slice(), AVG_RANK).map_err(|e| e.to_string())?;
    ensure(again == ranks, || "write/read round trip changed the ranks".into())?;
    Ok(format!("27 models round-trip; top {top} {top_rank}, bottom {bottom} {bottom_rank}"))
}

fn probe_gradient_check() -> Outcome {
    let (classes, dim, batch) = (5, 8, 16);
    let mut r = ChaCha8Rng::seed_from_u64(0x6AD);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut model = ProbeModel::zeros((0..classes).map(|c| format!("k{c}")).collect(), dim);
        model.weights.iter_mut().for_each(|w| *w = 0.5 * gaussian(&mut r));
        model.bias.iter_mut().for_each(|b| *b = 0.5 * gaussian(&mut r));
        let xs: Vec<f64> = (0..batch * dim).map(|_| gaussian(&mut r)).collect();
        let labels: Vec<usize> = (0..batch).map(|_| r.random_range(0..classes)).collect();
        let (_, gw, gb) = loss_and_gradient(&model, &xs, &labels);
        let analytic: Vec<f64> = gw.into_iter().chain(gb).collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        for p in 0..analytic.len() {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                if p < classes * dim {
                    m.weights[p] += delta;
                } else {
                    m.bias[p - classes * dim] += delta;
                }
                loss(&m, &xs, &labels)
            };
            numeric.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        worst = worst.max(diff / scale.max(f64::MIN_POSITIVE));
    }
    ensure(worst <= 1e-4, || format!("relative error {worst:e} exceeds 1e-4"))?;
    Ok(format!("20 instances (5 classes, dim 8), worst relative error {worst:.1e}"))
}

fn probe_accuracy(store: &EmbeddingStore, trials: u64) -> Result<Vec<f64>, String> {
    let parts: PartSet = [Part::Image].into_iter().collect();
    (0..trials)
        .map(|t| {
            let split = make_split(store, 2 * t).map_err(|e| e.to_string())?;
            let cfg = TrainConfig { shuffle_seed: 2 * t + 1, ..TrainConfig::default() };
            let model = train_probe(store, &split, &parts, &cfg).map_err(|e| e.to_string())?;
            Ok(evaluate_probe(&model, store, &split, &parts).map_err(|e| e.to_string())?.accuracy)
        })
        .collect()
}

fn probe_separability() -> Outcome {
    let (dim, per_class) = (8, 1500);
    // neighbouring centers are 10 sigma apart
    let separated: Vec<Vec<f64>> = [(-5.0, -5.0), (-5.0, 5.0), (5.0, -5.0), (5.0, 5.0)]
        .iter()
        .map(|&(a, b)| vec![a, b])
        .collect();
    let store = gaussian_store(&separated, 1.0, dim, per_class, 11);
    let acc = probe_accuracy(&store, 5)?;
    let min = acc.iter().copied().fold(1.0, f64::min);
    ensure(min >= 0.99, || format!("separated accuracy {acc:?} below 0.99"))?;
    let same = gaussian_store(&vec![vec![0.0]; 4], 1.0, dim, per_class, 12);
    let chance = probe_accuracy(&same, 5)?;
    ensure(chance.iter().all(|a| (a - 0.25).abs() <= 0.15), || {
        format!("indistinguishable accuracy {chance:?} outside 0.25±0.15")
    })?;
    let spread = |v: &[f64]| v.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join("/");
    Ok(format!("separated {} (>=0.99); indistinguishable {} (0.25±0.15)", spread(&acc), spread(&chance)))
}

/// The end-to-end world: eight benchmarks biased toward their own skill and a
/// population of specialist models.
fn skill_biased_world(seed: u64) -> WorldSpec {
    WorldSpec::skill_biased(8, 1000, 16, 20, 0.5, seed)
        .with_specialists(0.1)
        .expect("valid shape")
}

const BOTH: [Strategy; 2] = [Strategy::Fps, Strategy::RandomProportional];
const REPEATS: u64 = 20;
const REQUIRED: usize = 14; // 70% of 20

fn end_to_end_direction() -> Outcome {
    let budgets = [100, 250, 500];
    let mut wins = [0usize; 3];
    let mut means = [[0.0; 3]; 2];
    for rep in 0..REPEATS {
        let world = generate_world(&skill_biased_world(1000 + rep)).map_err(|e| e.to_string())?;
        let ctx = world.context().map_err(|e| e.to_string())?;
        let report = sweep_budgets(&ctx, None, &budgets, &BOTH, 10, rep, DistanceConfig::default())
            .map_err(|e| e.to_string())?;
        for (i, &b) in budgets.iter().enumerate() {
            let mean = |s| report.cell(s, b).and_then(|c| c.summary.mean).unwrap_or(f64::NAN);
            let (fps, random) = (mean(Strategy::Fps), mean(Strategy::RandomProportional));
            means[0][i] += fps / REPEATS as f64;
            means[1][i] += random / REPEATS as f64;
            if fps >= random {
                wins[i] += 1;
            }
        }
    }
    let detail = budgets
        .iter()
        .enumerate()
        .map(|(i, b)| format!("n={b}: {}/20 (FPS {:.3} vs RANDOM {:.3})", wins[i], means[0][i], means[1][i]))
        .collect::<Vec<_>>()
        .join("; ");
    ensure(wins.iter().all(|&w| w >= REQUIRED), || detail.clone())?;
    Ok(detail)
}

fn source_split_direction() -> Outcome {
    let mut wins = 0;
    let mut first = String::new();
    for rep in 0..REPEATS {
        let world = generate_world(&skill_biased_world(3000 + rep)).map_err(|e| e.to_string())?;
        let ctx = world.context().map_err(|e| e.to_string())?;
        let report = source_split_sweep(&ctx, 100, &BOTH, 3, rep, DistanceConfig::default())
            .map_err(|e| e.to_string())?;
        ensure(report.rows.iter().all(|row| {
            [&row.upper, &row.lower, &row.all].iter().all(|s| s.values.len() == 3 && s.mean.is_some() && s.std.is_some())
        }), || format!("repeat {rep}: a cell lacks three trials or mean±std"))?;
        let all = |s| report.row(s).and_then(|r| r.all.mean).unwrap_or(f64::NAN);
        if all(Strategy::Fps) >= all(Strategy::RandomProportional) {
            wins += 1;
        }
        if rep == 0 {
            first = report
                .rows
                .iter()
                .map(|r| format!("{} {}/{}/{}", r.strategy.label(), r.upper.display(), r.lower.display(), r.all.display()))
                .collect::<Vec<_>>()
                .join(", ");
        }
    }
    let detail = format!("FPS-all >= RANDOM-all in {wins}/20; first repeat upper/lower/all: {first}");
    ensure(wins >= REQUIRED, || detail.clone())?;
    Ok(detail)
}

fn filtering_direction() -> Outcome {
    let mut wins = 0;
    for rep in 0..REPEATS {
        let mut spec = skill_biased_world(3000 + rep);
        // benchmark 0 is larger and concentrated on a single skill
        let skew = 0.6;
        spec.items_per_benchmark = ItemCounts::PerBenchmark([1500].into_iter().chain([1000; 7]).collect());
        spec.benchmark_skill_mix[0] = (0..8).map(|s| if s == 0 { skew } else { (1.0 - skew) / 7.0 }).collect();
        let world = generate_world(&spec).map_err(|e| e.to_string())?;
        let ctx = world.context().map_err(|e| e.to_string())?;
        let report = filter_benchmark(&ctx, &WorldSpec::benchmark_name(0), 1000, 3, rep, DistanceConfig::default())
            .map_err(|e| e.to_string())?;
        if report.filtered.mean.is_some_and(|m| m >= report.unfiltered_rho) {
            wins += 1;
        }
    }
    let detail = format!("FPS-filtered 1000/1500 >= unfiltered in {wins}/20");
    ensure(wins >= REQUIRED, || detail.clone())?;
    Ok(detail)
}

fn format_round_trip() -> Outcome {
    let (n, dim) = (10_000, 24);
    let mut r = ChaCha8Rng::seed_from_u64(0xE3B1);
    let data: Vec<f32> = (0..n * dim).map(|_| gaussian(&mut r) as f32).collect();
    let items = (0..n)
        .map(|i| {
            ItemMeta::with_layout(
                format!("item-{i:05}"),
                format!("bench-{}", i % 7),
                if i % 7 < 4 { TaskFormat::Mcq } else { TaskFormat::Vqa },
                &[(Part::Image, 16), (Part::Question, 4), (Part::Answer, 4)],
            )
        })
        .collect();
    let store = EmbeddingStore::new(dim, data, items).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = dir.path().join("a.emb");
    let second = dir.path().join("b.emb");
    write_embeddings(&store, &first).map_err(|e| e.to_string())?;
    let loaded = read_embeddings(&first).map_err(|e| e.to_string())?;
    ensure(loaded == store, || "reloaded store differs".into())?;
    write_embeddings(&loaded, &second).map_err(|e| e.to_string())?;
    let bytes = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    ensure(bytes(&first)? == bytes(&second)?, || "rewritten embeddings differ".into())?;
    ensure(bytes(&meta_path(&first))? == bytes(&meta_path(&second))?, || "rewritten metadata differs".into())?;
    let size = bytes(&first)?.len();

    let mut corrupt = bytes(&first)?;
    corrupt[0] = b'X';
    std::fs::write(&second, &corrupt).map_err(|e| e.to_string())?;
    ensure(matches!(read_embeddings(&second), Err(Error::BadMagic { .. })), || "corrupted magic accepted".into())?;
    let mut short = bytes(&first)?;
    short.truncate(size - 1);
    std::fs::write(&second, &short).map_err(|e| e.to_string())?;
    ensure(matches!(read_embeddings(&second), Err(Error::Truncated { .. })), || "truncated file accepted".into())?;
    Ok(format!("{n} items x {dim} ({size} bytes) byte-identical; bad magic and truncation rejected"))
}

fn main() {
    let criteria = [
        Criterion { name: "FPS oracle equivalence", limit: Duration::from_secs(10), run: fps_oracle_equivalence },
        Criterion { name: "FPS prefix and selected-gap invariants", limit: Duration::from_secs(30), run: fps_invariants },
        Criterion { name: "Spearman closed form and hand example", limit: Duration::from_secs(60), run: spearman_closed_form },
        Criterion { name: "AvgRank fixture", limit: Duration::from_secs(60), run: avg_rank_fixture },
        Criterion { name: "Probe gradient check", limit: Duration::from_secs(5), run: probe_gradient_check },
        Criterion { name: "Probe separability and chance level", limit: Duration::from_secs(60), run: probe_separability },
        Criterion { name: "End-to-end FPS >= RANDOM at 100/250/500", limit: Duration::from_secs(600), run: end_to_end_direction },
        Criterion { name: "Upper/lower/all source split", limit: Duration::from_secs(600), run: source_split_direction },
        Criterion { name: "Single-benchmark FPS filtering", limit: Duration::from_secs(600), run: filtering_direction },
        Criterion { name: "EMB1 format round trip", limit: Duration::from_secs(60), run: format_round_trip },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; took longer than the {:?} limit", c.limit)),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "[{}] {} — {} ({:.1}s / {}s)",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failures, failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
