use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn resbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

/// CSV body without the `#` provenance lines.
fn body(path: impl AsRef<Path>) -> Vec<String> {
    read(path).lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

struct World {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl World {
    fn emb(&self) -> String {
        self.root.join("world/world.emb").display().to_string()
    }
    fn scores(&self) -> String {
        self.root.join("world/scores.csv").display().to_string()
    }
    fn out(&self, name: &str) -> String {
        self.root.join(name).display().to_string()
    }
}

fn world(extra: &[&str]) -> World {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let out = root.join("world").display().to_string();
    let mut args = vec!["synth", "--out", &out, "--seed", "3"];
    args.extend_from_slice(extra);
    let run = resbench(&args);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    World { _dir: dir, root }
}

fn small_world() -> World {
    world(&["--benchmarks", "4", "--items", "150", "--dim", "9", "--models", "6", "--specialists", "0.3"])
}

#[test]
fn synth_writes_a_loadable_world_with_provenance() {
    let w = small_world();
    let scores = read(w.scores());
    assert!(scores.starts_with("# resbench "));
    assert!(scores.contains("# seed: 3\n"));
    assert!(scores.contains("# config_sha256: "));
    assert_eq!(body(w.root.join("world/ground_truth.csv"))[0], "model,rank");
    let spec: serde_json::Value = serde_json::from_str(&read(w.root.join("world/world.json"))).unwrap();
    assert_eq!(spec["provenance"]["command"], "synth");
    assert_eq!(spec["seed"], 3);
    assert!(!scores.contains("run.log"));

    let imported = w.out("imported");
    let run = resbench(&["import", "--embeddings", &w.emb(), "--scores", &w.scores(), "--out", &imported]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let inventory = body(w.root.join("imported/inventory.csv"));
    assert_eq!(inventory[0], "benchmark,task_format,items,parts");
    assert_eq!(inventory.len(), 5);
    assert_eq!(
        std::fs::read(w.root.join("imported/store.emb")).unwrap(),
        std::fs::read(w.root.join("world/world.emb")).unwrap()
    );
}

#[test]
fn synth_from_config_file_uses_its_spec() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(
        &config,
        r#"{"n_benchmarks":2,"items_per_benchmark":[30,50],"dim":3,"n_skills":2,
            "benchmark_skill_mix":[[0.9,0.1],[0.2,0.8]],"cluster_spread":[1.0,0.5],
            "n_models":3,"model_skill":[[0.9,0.1],[0.5,0.5],[0.1,0.9]],"noise":0.05,"seed":17}"#,
    )
    .unwrap();
    let out = dir.path().join("w").display().to_string();
    let run = resbench(&["synth", "--config", &config.display().to_string(), "--out", &out]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(read(dir.path().join("w/scores.csv")).contains("# seed: 17\n"));
    let meta = read(dir.path().join("w/world.emb.meta.jsonl"));
    assert_eq!(meta.lines().count(), 80);

    std::fs::write(&config, r#"{"n_benchmarks":2}"#).unwrap();
    let bad = resbench(&["synth", "--config", &config.display().to_string(), "--out", &out]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn classify_reports_all_seven_combos_and_confusions() {
    let w = small_world();
    let out = w.out("classify");
    let run = resbench(&["classify", "--embeddings", &w.emb(), "--trials", "2", "--out", &out]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let summary = body(w.root.join("classify/accuracy_summary.csv"));
    assert_eq!(summary[0], "combo,mean,std_population,display,status");
    let combos: Vec<&str> = summary[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(combos, ["I", "Q", "A", "I+Q", "I+A", "Q+A", "I+Q+A"]);
    assert!(summary[1..].iter().all(|l| l.ends_with(",ok") && l.contains('±')));
    assert_eq!(body(w.root.join("classify/accuracy.csv")).len(), 1 + 7 * 2);
    for combo in combos {
        let cm = body(w.root.join(format!("classify/confusion/{combo}.csv")));
        assert_eq!(cm[0], "true\\predicted,bench-00,bench-01,bench-02,bench-03");
        // 150 items per benchmark -> 30 test items, summed over 2 trials
        for row in &cm[1..] {
            let total: u64 = row.split(',').skip(1).map(|c| c.parse::<u64>().unwrap()).sum();
            assert_eq!(total, 60);
        }
    }

    let json_out = w.out("classify-json");
    let run = resbench(&["classify", "--embeddings", &w.emb(), "--trials", "2", "--format", "json", "--out", &json_out]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let report: serde_json::Value = serde_json::from_str(&read(w.root.join("classify-json/classify.json"))).unwrap();
    assert_eq!(report["std_kind"], "population");
    assert_eq!(report["combos"].as_array().unwrap().len(), 7);
}

#[test]
fn classify_exit_codes() {
    let missing = resbench(&["classify", "--embeddings", "/nonexistent/store.emb", "--out", "/tmp"]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("/nonexistent/store.emb"));

    let single = world(&["--benchmarks", "1", "--items", "40", "--dim", "6", "--models", "3"]);
    let run = resbench(&["classify", "--embeddings", &single.emb(), "--out", &single.out("c")]);
    assert_eq!(code(&run), 3);
    assert!(stderr(&run).contains("need at least 2"));

    let bad_flag = resbench(&["classify", "--embeddings", &single.emb(), "--trials", "many"]);
    assert_eq!(code(&bad_flag), 2);
}

#[test]
fn sampling_is_deterministic_and_clamped() {
    let w = small_world();
    let (a, b) = (w.out("a"), w.out("b"));
    for out in [&a, &b] {
        let run = resbench(&["sample", "--embeddings", &w.emb(), "--strategy", "random", "--budget", "40", "--seed", "9", "--out", out]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
    }
    for file in ["sample.json", "ratios.csv"] {
        assert_eq!(read(w.root.join("a").join(file)), read(w.root.join("b").join(file)), "{file}");
    }
    let ratios = body(w.root.join("a/ratios.csv"));
    assert_eq!(ratios[0], "benchmark,sampled,original,ratio");
    let sampled: usize = ratios[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(sampled, 40);

    let clamp = w.out("clamp");
    let run = resbench(&["sample", "--embeddings", &w.emb(), "--budget", "100000", "--out", &clamp]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(stderr(&run).contains("warning: budget 100000 exceeds the 600 candidate items"));
    let sample: serde_json::Value = serde_json::from_str(&read(w.root.join("clamp/sample.json"))).unwrap();
    assert_eq!(sample["indices"].as_array().unwrap().len(), 600);

    let zero = resbench(&["sample", "--embeddings", &w.emb(), "--budget", "0", "--out", &clamp]);
    assert_eq!(code(&zero), 2);
}

#[test]
fn fps_pinned_start_and_part_selection() {
    let w = small_world();
    let out = w.out("pinned");
    let run = resbench(&[
        "sample", "--embeddings", &w.emb(), "--budget", "5", "--start-item", "bench-02-00007",
        "--parts", "I+Q", "--coverage", "--format", "json", "--out", &out,
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let sample: serde_json::Value = serde_json::from_str(&read(w.root.join("pinned/sample.json"))).unwrap();
    assert_eq!(sample["item_ids"][0], "bench-02-00007");
    let report: serde_json::Value = serde_json::from_str(&read(w.root.join("pinned/sample_report.json"))).unwrap();
    assert!(report["coverage_radius"].as_f64().unwrap() > 0.0);

    let unknown = resbench(&["sample", "--embeddings", &w.emb(), "--budget", "5", "--start-item", "nope", "--out", &out]);
    assert_eq!(code(&unknown), 2);
}

#[test]
fn large_store_fps_sample_has_unique_indices() {
    // 26 benchmarks totalling 93,990 items
    let w = world(&["--benchmarks", "26", "--items", "3615", "--dim", "16", "--models", "4"]);
    let out = w.out("big");
    let run = resbench(&["sample", "--embeddings", &w.emb(), "--budget", "1000", "--out", &out]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let sample: serde_json::Value = serde_json::from_str(&read(w.root.join("big/sample.json"))).unwrap();
    let indices: Vec<u64> = sample["indices"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(indices.len(), 1000);
    assert_eq!(indices.iter().collect::<HashSet<_>>().len(), 1000);
    assert!(indices.iter().all(|&i| i < 93_990));
}

#[test]
fn rank_writes_avg_rank_and_per_benchmark_table() {
    let w = small_world();
    let out = w.out("rank");
    let run = resbench(&["rank", "--embeddings", &w.emb(), "--scores", &w.scores(), "--out", &out]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let avg = body(w.root.join("rank/avg_rank.csv"));
    assert_eq!(avg[0], "model,rank");
    assert_eq!(avg.len(), 7);
    let table = body(w.root.join("rank/benchmark_ranks.csv"));
    assert_eq!(table[0], "model,bench-00,bench-01,bench-02,bench-03,AvgRank");
    // AvgRank column is the mean of the benchmark columns
    for row in &table[1..] {
        let v: Vec<f64> = row.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        let mean = v[..4].iter().sum::<f64>() / 4.0;
        assert!((mean - v[4]).abs() < 1e-12);
    }
}

#[test]
fn correlate_self_reference_repeats_and_split_halves() {
    let w = small_world();
    let mut samples = Vec::new();
    for seed in ["1", "2", "3"] {
        let out = w.out(&format!("s{seed}"));
        let run = resbench(&["sample", "--embeddings", &w.emb(), "--benchmarks", "bench-01", "--budget", "60", "--seed", seed, "--out", &out]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
        samples.push(w.root.join(format!("s{seed}/sample.json")).display().to_string());
    }
    let (out, emb, scores) = (w.out("corr"), w.emb(), w.scores());
    let mut args = vec![
        "correlate", "--embeddings", &emb, "--scores", &scores, "--split-halves", "--budget", "50",
        "--label", "FPS-bench-01", "--out", &out,
    ];
    for s in &samples {
        args.extend_from_slice(&["--sample", s]);
    }
    let run = resbench(&args);
    assert_eq!(code(&run), 0, "{}", stderr(&run));

    let table = body(w.root.join("corr/correlations.csv"));
    assert_eq!(table[0], "source,rho,std,repeats,display");
    assert!(table.iter().any(|l| l.starts_with("AvgRank,1,")), "{table:?}");
    let repeated = table.iter().find(|l| l.starts_with("FPS-bench-01,")).expect("resampled row");
    let display = repeated.rsplit(',').next().unwrap();
    let (mean, std) = display.split_once('±').expect("mean±std");
    assert_eq!(mean.split_once('.').unwrap().1.len(), 3);
    assert_eq!(std.split_once('.').unwrap().1.len(), 3);
    assert!(repeated.contains(",3,"));

    let halves = body(w.root.join("corr/split_halves.csv"));
    assert_eq!(halves[0], "strategy,Upper Half,Lower Half,All");
    assert_eq!(halves.len(), 3);
}

#[test]
fn correlate_rejects_mismatched_reference() {
    let w = small_world();
    let reference = w.root.join("ref.csv");
    std::fs::write(&reference, "model,rank\nsomeone,1\nelse,2\n").unwrap();
    let run = resbench(&[
        "correlate", "--embeddings", &w.emb(), "--scores", &w.scores(),
        "--reference", &reference.display().to_string(), "--out", &w.out("x"),
    ]);
    assert_eq!(code(&run), 3);
    assert!(stderr(&run).contains("model set mismatch"));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let w = small_world();
    let (a, b) = (w.out("a"), w.out("b"));
    for out in [&a, &b] {
        let run = resbench(&["sweep", "--embeddings", &w.emb(), "--scores", &w.scores(), "--budgets", "20,60", "--repeats", "2", "--seed", "4", "--out", out]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
    }
    for file in ["sweep.csv", "sweep_summary.csv"] {
        assert_eq!(read(w.root.join("a").join(file)), read(w.root.join("b").join(file)));
    }
    let records = body(w.root.join("a/sweep.csv"));
    assert_eq!(records[0], "strategy,budget,repeat,rho");
    assert_eq!(records.len(), 1 + 2 * 2 * 2);
    // timestamps live only in the run log
    assert!(read(w.root.join("a/run.log")).contains("sweep: ok"));
    assert!(!read(w.root.join("a/sweep.csv")).contains("run.log"));
}
