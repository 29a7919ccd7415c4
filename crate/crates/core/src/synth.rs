//! Synthetic worlds with known ground truth: benchmark corpora drawn from
//! skill-aligned Gaussian mixtures and a model population with latent skills.
//!
//! Every skill owns an anchor point in embedding space. An item of benchmark `b`
//! draws a skill `k` from the benchmark's mixture and is placed at
//! `c_b + spread_b * (anchor_k - c_b + noise)`, where `c_b` is the mixture-weighted
//! anchor centroid. A model answers an item correctly with probability equal to its
//! skill on the anchor nearest the item, and each outcome is flipped with
//! probability `noise`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, ItemMeta, Part, ScoreRange, ScoreTable, TaskFormat};
use crate::experiment::{self, EvalContext, SweepReport};
use crate::ranking::{mid_ranks, RankVector};
use crate::sampler::{DistanceConfig, Strategy};
use crate::seed::{derive_seed, rng};
use crate::{Error, Result};

pub const GROUND_TRUTH: &str = "GroundTruth";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ItemCounts {
    Uniform(usize),
    PerBenchmark(Vec<usize>),
}

impl ItemCounts {
    pub fn get(&self, benchmark: usize) -> usize {
        match self {
            ItemCounts::Uniform(n) => *n,
            ItemCounts::PerBenchmark(v) => v[benchmark],
        }
    }
}

fn default_separation() -> f64 {
    8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub n_benchmarks: usize,
    pub items_per_benchmark: ItemCounts,
    pub dim: usize,
    pub n_skills: usize,
    /// Per benchmark, weights over skills summing to one.
    pub benchmark_skill_mix: Vec<Vec<f64>>,
    pub cluster_spread: Vec<f64>,
    /// Approximate distance between skill anchors.
    #[serde(default = "default_separation")]
    pub skill_separation: f64,
    pub n_models: usize,
    /// Per model, success probability on each skill.
    pub model_skill: Vec<Vec<f64>>,
    /// Probability of flipping each item outcome.
    pub noise: f64,
    pub seed: u64,
}

impl WorldSpec {
    /// One benchmark per skill, each putting weight `dominance` on its own skill and
    /// spreading the rest evenly, with uniformly drawn model skills in [0.05, 0.95].
    pub fn skill_biased(
        n_benchmarks: usize,
        items_per_benchmark: usize,
        dim: usize,
        n_models: usize,
        dominance: f64,
        seed: u64,
    ) -> Self {
        let k = n_benchmarks;
        let rest = if k > 1 { (1.0 - dominance) / (k - 1) as f64 } else { 0.0 };
        let benchmark_skill_mix = (0..k)
            .map(|b| {
                (0..k)
                    .map(|s| match (s == b, k) {
                        (true, 1) => 1.0,
                        (true, _) => dominance.min(1.0),
                        (false, _) => rest,
                    })
                    .collect()
            })
            .collect();
        let mut r = rng(derive_seed(seed, 0xA11));
        let model_skill = (0..n_models)
            .map(|_| (0..k).map(|_| r.random_range(0.05..0.95)).collect())
            .collect();
        WorldSpec {
            n_benchmarks,
            items_per_benchmark: ItemCounts::Uniform(items_per_benchmark),
            dim,
            n_skills: k,
            benchmark_skill_mix,
            cluster_spread: vec![1.0; k],
            skill_separation: default_separation(),
            n_models,
            model_skill,
            noise: 0.0,
            seed,
        }
    }

    /// Redraws model skills as `0.05 + 0.9 * Beta(shape, shape)`. Shapes below one
    /// push each skill toward the extremes, giving specialist models that are strong
    /// on some skills and weak on others; `shape = 1` is the uniform population.
    pub fn with_specialists(mut self, shape: f64) -> Result<Self> {
        let beta = rand_distr::Beta::new(shape, shape)
            .map_err(|_| Error::InvalidWorld(format!("invalid specialisation shape {shape}")))?;
        let mut r = rng(derive_seed(self.seed, 0xB17A));
        for skills in &mut self.model_skill {
            for s in skills.iter_mut() {
                *s = (0.05 + 0.9 * beta.sample(&mut r)).clamp(0.05, 0.95);
            }
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidWorld(m));
        if self.n_benchmarks == 0 || self.dim == 0 || self.n_skills == 0 || self.n_models == 0 {
            return bad("all counts must be at least 1".into());
        }
        match &self.items_per_benchmark {
            ItemCounts::Uniform(0) => return bad("items_per_benchmark must be at least 1".into()),
            ItemCounts::PerBenchmark(v) if v.len() != self.n_benchmarks || v.contains(&0) => {
                return bad("items_per_benchmark needs one positive count per benchmark".into())
            }
            _ => {}
        }
        if self.benchmark_skill_mix.len() != self.n_benchmarks {
            return bad("benchmark_skill_mix needs one row per benchmark".into());
        }
        for (b, mix) in self.benchmark_skill_mix.iter().enumerate() {
            let sum: f64 = mix.iter().sum();
            if mix.len() != self.n_skills
                || mix.iter().any(|w| !w.is_finite() || *w < 0.0)
                || (sum - 1.0).abs() > 1e-9
            {
                return bad(format!("skill mix of benchmark {b} is not on the simplex"));
            }
        }
        if self.cluster_spread.len() != self.n_benchmarks
            || self.cluster_spread.iter().any(|s| !s.is_finite() || *s < 0.0)
        {
            return bad("cluster_spread needs one non-negative value per benchmark".into());
        }
        if !(self.skill_separation.is_finite() && self.skill_separation > 0.0) {
            return bad("skill_separation must be positive".into());
        }
        if self.model_skill.len() != self.n_models
            || self
                .model_skill
                .iter()
                .any(|s| s.len() != self.n_skills || s.iter().any(|p| !(0.0..=1.0).contains(p)))
        {
            return bad("model_skill needs n_skills probabilities per model".into());
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad("noise must be a probability".into());
        }
        Ok(())
    }

    pub fn benchmark_name(b: usize) -> String {
        format!("bench-{b:02}")
    }

    pub fn model_name(m: usize) -> String {
        format!("model-{m:02}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub spec: WorldSpec,
    pub store: EmbeddingStore,
    pub scores: ScoreTable,
    /// Models ranked by mean skill.
    pub ground_truth: RankVector,
    /// Skill anchor nearest to each item, which decides its correctness odds.
    pub item_skill: Vec<usize>,
    /// Skill drawn from the benchmark mixture for each item.
    pub drawn_skill: Vec<usize>,
}

impl SyntheticWorld {
    pub fn context(&self) -> Result<EvalContext<'_>> {
        EvalContext::new(&self.store, &self.scores)
    }
}

fn part_layout(dim: usize) -> Vec<(Part, usize)> {
    if dim >= 3 {
        let third = dim / 3;
        vec![
            (Part::Image, dim - 2 * third),
            (Part::Question, third),
            (Part::Answer, third),
        ]
    } else {
        vec![(Part::Image, dim)]
    }
}

fn gaussian(r: &mut impl Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn generate_world(spec: &WorldSpec) -> Result<SyntheticWorld> {
    spec.validate()?;
    let dim = spec.dim;
    let mut r = rng(spec.seed);

    // random directions scaled so anchors sit about `skill_separation` apart
    let anchors: Vec<Vec<f64>> = (0..spec.n_skills)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| gaussian(&mut r)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let scale = spec.skill_separation / std::f64::consts::SQRT_2 / norm;
            v.into_iter().map(|x| x * scale).collect()
        })
        .collect();

    let layout = part_layout(dim);
    let mut data = Vec::new();
    let mut items = Vec::new();
    let mut item_skill = Vec::new();
    let mut drawn_skill = Vec::new();
    let mut point = vec![0.0f64; dim];
    for b in 0..spec.n_benchmarks {
        let mix = &spec.benchmark_skill_mix[b];
        let spread = spec.cluster_spread[b];
        let centroid: Vec<f64> = (0..dim)
            .map(|d| mix.iter().zip(&anchors).map(|(w, a)| w * a[d]).sum())
            .collect();
        let name = WorldSpec::benchmark_name(b);
        for i in 0..spec.items_per_benchmark.get(b) {
            let k = draw_categorical(&mut r, mix);
            for d in 0..dim {
                let offset = anchors[k][d] - centroid[d] + gaussian(&mut r);
                point[d] = centroid[d] + spread * offset;
            }
            data.extend(point.iter().map(|&v| v as f32));
            item_skill.push(nearest(&anchors, &point));
            drawn_skill.push(k);
            items.push(ItemMeta::with_layout(
                format!("{name}-{i:05}"),
                name.clone(),
                TaskFormat::Mcq,
                &layout,
            ));
        }
    }
    let store = EmbeddingStore::new(dim, data, items)?;

    let models: Vec<String> = (0..spec.n_models).map(WorldSpec::model_name).collect();
    let item_ids: Vec<String> = store.items().iter().map(|m| m.item_id.clone()).collect();
    let mut cells = Vec::with_capacity(models.len() * item_ids.len());
    for skill in &spec.model_skill {
        for &k in &item_skill {
            let mut correct = r.random::<f64>() < skill[k];
            if r.random::<f64>() < spec.noise {
                correct = !correct;
            }
            cells.push(Some(if correct { 1.0 } else { 0.0 }));
        }
    }
    let scores = ScoreTable::new(models.clone(), item_ids, cells, ScoreRange::default())?;

    let neg_mean: Vec<f64> = spec
        .model_skill
        .iter()
        .map(|s| -s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    let ground_truth = RankVector {
        source: GROUND_TRUTH.into(),
        models,
        ranks: mid_ranks(&neg_mean),
    };
    Ok(SyntheticWorld {
        spec: spec.clone(),
        store,
        scores,
        ground_truth,
        item_skill,
        drawn_skill,
    })
}

fn draw_categorical(r: &mut impl Rng, weights: &[f64]) -> usize {
    let u: f64 = r.random();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    // rounding left a sliver above the last cumulative weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn nearest(anchors: &[Vec<f64>], x: &[f64]) -> usize {
    let d = |a: &[f64]| -> f64 { a.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum() };
    let mut best = 0;
    let mut best_d = d(&anchors[0]);
    for (k, a) in anchors.iter().enumerate().skip(1) {
        let dk = d(a);
        if dk < best_d {
            best = k;
            best_d = dk;
        }
    }
    best
}

/// Subset-size sweep against the world's full-data AvgRank.
pub fn sweep_budgets(
    world: &SyntheticWorld,
    budgets: &[usize],
    strategies: &[Strategy],
    repeats: usize,
    seed: u64,
    dist: DistanceConfig,
) -> Result<SweepReport> {
    let ctx = world.context()?;
    experiment::sweep_budgets(&ctx, None, budgets, strategies, repeats, seed, dist)
}
