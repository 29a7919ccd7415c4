//! Dataset-classification probe: a linear softmax classifier over frozen
//! embeddings that predicts which benchmark an item belongs to.
//!
//! Each benchmark contributes up to [`TRAIN_CAP`] training items (80% when it is
//! smaller) and the probe is trained with Adam from a zero initialization.

mod adam;
mod objective;

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, Part, PartSet};
use crate::ranking::mean_std;
use crate::seed;
use crate::{Error, Result};

pub use objective::{loss, loss_and_gradient};

pub const TRAIN_CAP: usize = 1000;
pub const TRAIN_FRACTION: f64 = 0.8;
/// Per-benchmark test budget once a benchmark is large enough to give 1000 training items.
pub const TEST_CAP: usize = 250;
/// Benchmarks with at least this many items use the capped rule.
pub const CAPPED_FROM: usize = 1250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub class_labels: Vec<String>,
    dim: usize,
    /// classes x dim, row-major
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ProbeModel {
    pub fn zeros(class_labels: Vec<String>, dim: usize) -> Self {
        let k = class_labels.len();
        ProbeModel {
            class_labels,
            dim,
            weights: vec![0.0; k * dim],
            bias: vec![0.0; k],
        }
    }

    pub fn classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.dim..(c + 1) * self.dim];
            *o = self.bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.classes()];
        self.logits_into(x, &mut out);
        out
    }

    /// Arg-max class; the lowest index wins ties.
    pub fn predict(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (c, &l) in logits.iter().enumerate().skip(1) {
            if l > logits[best] {
                best = c;
            }
        }
        best
    }
}

/// Train/test assignment of store rows, plus the class index of every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_cap: usize,
    pub train_fraction: f64,
    pub test_cap: usize,
    pub class_labels: Vec<String>,
    /// Class index per store row.
    pub labels: Vec<usize>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `(train, test)` sizes for a benchmark of `n` items.
pub fn split_sizes(n: usize) -> (usize, usize) {
    if n >= CAPPED_FROM {
        (TRAIN_CAP, (n - TRAIN_CAP).min(TEST_CAP))
    } else {
        let train = n * 4 / 5;
        (train, n - train)
    }
}

pub fn make_split(store: &EmbeddingStore, seed: u64) -> Result<SplitSpec> {
    let groups = store.rows_by_benchmark();
    let mut labels = vec![0; store.count()];
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut rng = seed::rng(seed);
    for (class, (bench, rows)) in groups.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::TooFewItems {
                benchmark: bench.clone(),
                count: rows.len(),
            });
        }
        for &r in rows {
            labels[r] = class;
        }
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        let (n_train, n_test) = split_sizes(rows.len());
        train.extend_from_slice(&shuffled[..n_train]);
        test.extend_from_slice(&shuffled[n_train..n_train + n_test]);
    }
    Ok(SplitSpec {
        seed,
        train_cap: TRAIN_CAP,
        train_fraction: TRAIN_FRACTION,
        test_cap: TEST_CAP,
        class_labels: groups.into_iter().map(|(b, _)| b).collect(),
        labels,
        train,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A fitted probe with its optimization history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub model: ProbeModel,
    /// Mean training loss over the whole training set after each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

fn features(store: &EmbeddingStore, rows: &[usize]) -> Vec<f64> {
    rows.iter()
        .flat_map(|&r| store.row(r).iter().map(|&v| f64::from(v)))
        .collect()
}

fn check_split(store: &EmbeddingStore, split: &SplitSpec) -> Result<()> {
    if split.labels.len() != store.count() {
        return Err(Error::InvalidArgument(format!(
            "split covers {} rows, store has {}",
            split.labels.len(),
            store.count()
        )));
    }
    Ok(())
}

pub fn train_probe(
    store: &EmbeddingStore,
    split: &SplitSpec,
    parts: &PartSet,
    cfg: &TrainConfig,
) -> Result<ProbeModel> {
    cfg.validate()?;
    Ok(fit(store, split, parts, cfg)?.model)
}

/// Training without the positive-epoch check, so zero-step runs can be inspected.
pub fn fit(
    store: &EmbeddingStore,
    split: &SplitSpec,
    parts: &PartSet,
    cfg: &TrainConfig,
) -> Result<TrainTrace> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    check_split(store, split)?;
    let view = store.select_parts(parts)?;
    let dim = view.dim();
    let xs = features(&view, &split.train);
    let ys: Vec<usize> = split.train.iter().map(|&r| split.labels[r]).collect();

    let mut model = ProbeModel::zeros(split.class_labels.clone(), dim);
    let mut adam_w = adam::Adam::new(model.weights.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut adam_b = adam::Adam::new(model.bias.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut rng = seed::rng(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..ys.len()).collect();
    let mut batch_x = Vec::with_capacity(cfg.batch_size * dim);
    let mut batch_y = Vec::with_capacity(cfg.batch_size);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.extend_from_slice(&xs[i * dim..(i + 1) * dim]);
                batch_y.push(ys[i]);
            }
            let (_, gw, gb) = loss_and_gradient(&model, &batch_x, &batch_y);
            adam_w.step(&mut model.weights, &gw);
            adam_b.step(&mut model.bias, &gb);
            steps += 1;
        }
        epoch_losses.push(loss(&model, &xs, &ys));
    }
    Ok(TrainTrace {
        model,
        epoch_losses,
        steps,
    })
}

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![0; k * k],
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.size() + predicted]
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        let k = self.size();
        self.counts[truth * k + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.size()).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.size()).map(|r| r.iter().sum()).collect()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    /// Element-wise sum with a matrix over the same classes.
    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::ClassMismatch("confusion matrices differ in classes".into()));
        }
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// CSV with the class names as header row and first column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.size()).map(|j| self.get(i, j).to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate_probe(
    model: &ProbeModel,
    store: &EmbeddingStore,
    split: &SplitSpec,
    parts: &PartSet,
) -> Result<Evaluation> {
    if model.class_labels != split.class_labels {
        return Err(Error::ClassMismatch(format!(
            "model classes {:?} vs split classes {:?}",
            model.class_labels, split.class_labels
        )));
    }
    check_split(store, split)?;
    let view = store.select_parts(parts)?;
    if view.dim() != model.dim() {
        return Err(Error::InvalidArgument(format!(
            "model expects {} features, selected parts give {}",
            model.dim(),
            view.dim()
        )));
    }
    let mut confusion = ConfusionMatrix::new(model.class_labels.clone());
    let mut x = vec![0.0; view.dim()];
    for &r in &split.test {
        for (d, &v) in x.iter_mut().zip(view.row(r)) {
            *d = f64::from(v);
        }
        confusion.record(split.labels[r], model.predict(&x));
    }
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        confusion,
    })
}

/// The seven image/question/answer combinations in table order.
pub fn all_combos() -> Vec<PartSet> {
    use Part::*;
    vec![
        [Image].into(),
        [Question].into(),
        [Answer].into(),
        [Image, Question].into(),
        [Image, Answer].into(),
        [Question, Answer].into(),
        [Image, Question, Answer].into(),
    ]
}

/// Combinations whose parts every item of the store provides.
pub fn available_combos(store: &EmbeddingStore) -> Vec<PartSet> {
    let common = store.common_parts();
    all_combos()
        .into_iter()
        .filter(|c| c.is_subset(&common))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboResult {
    pub combo: PartSet,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over trials.
    pub std: f64,
    /// Confusion counts summed over all trials.
    pub confusion: ConfusionMatrix,
}

impl ComboResult {
    pub fn label(&self) -> String {
        Part::combo_label(&self.combo)
    }

    /// `0.752±0.007`
    pub fn display(&self) -> String {
        format!("{:.3}±{:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub results: Vec<ComboResult>,
}

/// Split, train and evaluate `trials` times per combination. Trial `t` uses the
/// same split and shuffle seeds for every combination.
pub fn run_classification_suite(
    store: &EmbeddingStore,
    combos: &[PartSet],
    trials: usize,
    seed: u64,
    base: &TrainConfig,
) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    base.validate()?;
    let common = store.common_parts();
    for combo in combos {
        if let Some(&p) = combo.iter().find(|p| !common.contains(p)) {
            let item = store
                .items()
                .iter()
                .find(|m| !m.parts.contains(&p))
                .map(|m| m.item_id.clone())
                .unwrap_or_default();
            return Err(Error::MissingPart { item, part: p });
        }
    }
    let found = store.benchmarks().len();
    if found < 2 {
        return Err(Error::TooFewClasses { found });
    }
    let splits = (0..trials)
        .map(|t| make_split(store, seed::derive_seed(seed, 2 * t as u64)))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..combos.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let evals = jobs
        .par_iter()
        .map(|&(c, t)| {
            let cfg = TrainConfig {
                shuffle_seed: seed::derive_seed(seed, 2 * t as u64 + 1),
                ..*base
            };
            let model = train_probe(store, &splits[t], &combos[c], &cfg)?;
            evaluate_probe(&model, store, &splits[t], &combos[c])
        })
        .collect::<Result<Vec<_>>>()?;

    let results = combos
        .iter()
        .enumerate()
        .map(|(c, combo)| {
            let runs = &evals[c * trials..(c + 1) * trials];
            let accuracies: Vec<f64> = runs.iter().map(|e| e.accuracy).collect();
            let mut confusion = ConfusionMatrix::new(runs[0].confusion.labels.clone());
            for e in runs {
                confusion.add(&e.confusion)?;
            }
            let (mean, std) = mean_std(&accuracies);
            Ok(ComboResult {
                combo: combo.clone(),
                accuracies,
                mean,
                std,
                confusion,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        seed,
        trials,
        results,
    })
}
