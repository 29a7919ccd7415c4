//! Farthest point sampling and the size-proportional random baseline.
//!
//! FPS starts from a seeded random item and repeatedly adds the item whose
//! distance to its nearest already-selected item is largest. The per-item
//! nearest distances are kept in [`FpsState`] and updated in O(n) per pick.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EmbeddingStore;
use crate::seed;
use crate::{Error, Result};

/// Rows per rayon task for the distance update.
const PAR_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(u, v)`; rows are L2-normalized internally.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub metric: Metric,
    /// L2-normalize rows before computing distances.
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "FPS")]
    Fps,
    #[serde(rename = "RANDOM_PROPORTIONAL")]
    RandomProportional,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Fps => "FPS",
            Strategy::RandomProportional => "RANDOM",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fps" => Ok(Strategy::Fps),
            "random" | "random_proportional" => Ok(Strategy::RandomProportional),
            _ => Err(Error::InvalidArgument(format!("unknown strategy {s:?}"))),
        }
    }
}

/// An ordered selection of store rows and how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub strategy: Strategy,
    pub seed: u64,
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistanceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_filter: Option<Vec<String>>,
    pub indices: Vec<usize>,
    pub item_ids: Vec<String>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: SampleSet = serde_json::from_str(&text)?;
        if s.indices.len() != s.item_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "{}: {} indices but {} item ids",
                path.display(),
                s.indices.len(),
                s.item_ids.len()
            )));
        }
        Ok(s)
    }

    /// Checks that indices and item ids refer to the same rows of `store`.
    pub fn check_against(&self, store: &EmbeddingStore) -> Result<()> {
        let mut seen = HashSet::new();
        for (&i, id) in self.indices.iter().zip(&self.item_ids) {
            if i >= store.count() || store.items()[i].item_id != *id {
                return Err(Error::InvalidArgument(format!(
                    "sample entry ({i}, {id:?}) does not match the store"
                )));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidArgument(format!("row {i} sampled twice")));
            }
        }
        Ok(())
    }
}

/// Rows eligible for sampling, optionally restricted to some benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    rows: Vec<usize>,
    filter: Option<Vec<String>>,
}

impl Candidates {
    pub fn all(store: &EmbeddingStore) -> Self {
        Candidates {
            rows: (0..store.count()).collect(),
            filter: None,
        }
    }

    pub fn benchmarks(store: &EmbeddingStore, benchmarks: &[String]) -> Result<Self> {
        let known: HashSet<String> = store.benchmarks().into_iter().collect();
        if let Some(b) = benchmarks.iter().find(|b| !known.contains(*b)) {
            return Err(Error::InvalidArgument(format!("unknown benchmark {b:?}")));
        }
        let wanted: HashSet<&str> = benchmarks.iter().map(String::as_str).collect();
        let rows: Vec<usize> = store
            .items()
            .iter()
            .enumerate()
            .filter(|(_, m)| wanted.contains(m.benchmark.as_str()))
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidArgument("benchmark filter selects no items".into()));
        }
        Ok(Candidates {
            rows,
            filter: Some(benchmarks.to_vec()),
        })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Candidate rows widened to `f64` and prepared for the configured metric.
#[derive(Debug, Clone)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
    metric: Metric,
}

impl Points {
    pub fn new(store: &EmbeddingStore, rows: &[usize], dist: DistanceConfig) -> Result<Self> {
        let dim = store.dim();
        let mut data = Vec::with_capacity(rows.len() * dim);
        let unit = dist.normalize || dist.metric == Metric::Cosine;
        for &r in rows {
            let start = data.len();
            data.extend(store.row(r).iter().map(|&v| f64::from(v)));
            if unit {
                let row = &mut data[start..];
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::ZeroVector { row: r });
                }
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Ok(Points {
            dim,
            data,
            metric: dist.metric,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row(i), self.row(j));
        match self.metric {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (1.0 - dot).max(0.0)
            }
        }
    }
}

/// Greedy FPS state over a [`Points`] set, indexed by position in that set.
#[derive(Debug, Clone)]
pub struct FpsState<'a> {
    points: &'a Points,
    selected: Vec<usize>,
    is_selected: Vec<bool>,
    min_dist: Vec<f64>,
}

impl<'a> FpsState<'a> {
    pub fn new(points: &'a Points, start: usize) -> Result<Self> {
        let n = points.len();
        if start >= n {
            return Err(Error::InvalidArgument(format!(
                "start {start} out of range for {n} points"
            )));
        }
        let mut state = FpsState {
            points,
            selected: Vec::new(),
            is_selected: vec![false; n],
            min_dist: vec![f64::INFINITY; n],
        };
        state.select(start);
        Ok(state)
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn min_dist(&self) -> &[f64] {
        &self.min_dist
    }

    /// Largest distance from any point to its nearest selected point.
    pub fn coverage_radius(&self) -> f64 {
        self.min_dist.iter().copied().fold(0.0, f64::max)
    }

    /// Unselected point farthest from the selection; lowest index wins ties.
    pub fn farthest(&self) -> Option<(usize, f64)> {
        let better = |a: Option<(usize, f64)>, b: Option<(usize, f64)>| match (a, b) {
            (None, x) | (x, None) => x,
            (Some((ia, da)), Some((ib, db))) => {
                if db > da || (db == da && ib < ia) {
                    Some((ib, db))
                } else {
                    Some((ia, da))
                }
            }
        };
        self.min_dist
            .par_iter()
            .with_min_len(PAR_CHUNK)
            .enumerate()
            .filter(|&(i, _)| !self.is_selected[i])
            .map(|(i, &d)| Some((i, d)))
            .reduce(|| None, better)
    }

    /// Adds the farthest point; returns it, or `None` once everything is selected.
    pub fn step(&mut self) -> Option<usize> {
        let (next, _) = self.farthest()?;
        self.select(next);
        Some(next)
    }

    fn select(&mut self, idx: usize) {
        let points = self.points;
        self.min_dist
            .par_iter_mut()
            .with_min_len(PAR_CHUNK)
            .enumerate()
            .for_each(|(i, d)| {
                let nd = points.distance(idx, i);
                if nd < *d {
                    *d = nd;
                }
            });
        self.min_dist[idx] = 0.0;
        self.is_selected[idx] = true;
        self.selected.push(idx);
    }
}

pub fn fps_sample(
    store: &EmbeddingStore,
    budget: usize,
    seed: u64,
    dist: DistanceConfig,
) -> Result<SampleSet> {
    fps_sample_in(store, &Candidates::all(store), budget, seed, dist, None)
}

/// FPS over `candidates`. `start` pins the first pick to a store row; when `None`
/// the first row is drawn uniformly from the candidates with the seeded RNG.
pub fn fps_sample_in(
    store: &EmbeddingStore,
    candidates: &Candidates,
    budget: usize,
    seed: u64,
    dist: DistanceConfig,
    start: Option<usize>,
) -> Result<SampleSet> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no items to sample from".into()));
    }
    let points = Points::new(store, candidates.rows(), dist)?;
    let first = match start {
        Some(row) => candidates.rows().iter().position(|&r| r == row).ok_or_else(|| {
            Error::InvalidArgument(format!("start row {row} is not a candidate"))
        })?,
        None => seed::rng(seed).random_range(0..points.len()),
    };
    let mut state = FpsState::new(&points, first)?;
    let k = budget.min(points.len());
    while state.selected().len() < k {
        state.step();
    }
    let indices: Vec<usize> = state.selected().iter().map(|&p| candidates.rows()[p]).collect();
    Ok(finish(
        store,
        Strategy::Fps,
        seed,
        budget,
        Some(dist),
        start,
        candidates,
        indices,
    ))
}

pub fn random_proportional_sample(
    store: &EmbeddingStore,
    budget: usize,
    seed: u64,
) -> Result<SampleSet> {
    random_proportional_sample_in(store, &Candidates::all(store), budget, seed)
}

/// Uniform draw without replacement over the pooled candidates, so each
/// benchmark is represented in proportion to its size in expectation.
pub fn random_proportional_sample_in(
    store: &EmbeddingStore,
    candidates: &Candidates,
    budget: usize,
    seed: u64,
) -> Result<SampleSet> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if budget > candidates.len() {
        return Err(Error::BudgetTooLarge {
            budget,
            available: candidates.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let picks = rand::seq::index::sample(&mut rng, candidates.len(), budget);
    let indices = picks.iter().map(|p| candidates.rows()[p]).collect();
    Ok(finish(
        store,
        Strategy::RandomProportional,
        seed,
        budget,
        None,
        None,
        candidates,
        indices,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    store: &EmbeddingStore,
    strategy: Strategy,
    seed: u64,
    budget: usize,
    dist: Option<DistanceConfig>,
    start: Option<usize>,
    candidates: &Candidates,
    indices: Vec<usize>,
) -> SampleSet {
    let item_ids = indices
        .iter()
        .map(|&i| store.items()[i].item_id.clone())
        .collect();
    SampleSet {
        strategy,
        seed,
        budget,
        dist,
        start,
        source_filter: candidates.filter.clone(),
        indices,
        item_ids,
    }
}

/// Largest distance from any store item to its nearest sampled item.
pub fn coverage_radius(
    store: &EmbeddingStore,
    sample: &SampleSet,
    dist: DistanceConfig,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if let Some(&bad) = sample.indices.iter().find(|&&i| i >= store.count()) {
        return Err(Error::InvalidArgument(format!("sample row {bad} out of range")));
    }
    let all: Vec<usize> = (0..store.count()).collect();
    let points = Points::new(store, &all, dist)?;
    Ok((0..points.len())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            sample
                .indices
                .iter()
                .map(|&s| points.distance(i, s))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRatio {
    pub sampled: usize,
    pub original: usize,
    pub ratio: f64,
}

/// Share of each benchmark that made it into the sample.
pub fn per_benchmark_ratio(
    sample: &SampleSet,
    store: &EmbeddingStore,
) -> Result<BTreeMap<String, BenchmarkRatio>> {
    let mut out: BTreeMap<String, BenchmarkRatio> = BTreeMap::new();
    for (bench, rows) in store.rows_by_benchmark() {
        out.insert(
            bench,
            BenchmarkRatio {
                sampled: 0,
                original: rows.len(),
                ratio: 0.0,
            },
        );
    }
    for &i in &sample.indices {
        let meta = store
            .items()
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("sample row {i} out of range")))?;
        out.get_mut(&meta.benchmark).expect("benchmark present").sampled += 1;
    }
    for r in out.values_mut() {
        r.ratio = r.sampled as f64 / r.original as f64;
    }
    Ok(out)
}
