//! Model ranks from scores, rank averaging across benchmarks and Spearman
//! correlation between orderings.
//!
//! Ranks are fractional: 1 is best and tied models share the mean of the
//! positions they occupy, so a vector over `M` models always sums to
//! `M(M+1)/2`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, ScoreTable};
use crate::{Error, Result};

pub const AVG_RANK: &str = "AvgRank";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankVector {
    pub source: String,
    pub models: Vec<String>,
    pub ranks: Vec<f64>,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn rank_of(&self, model: &str) -> Option<f64> {
        self.models
            .iter()
            .position(|m| m == model)
            .map(|i| self.ranks[i])
    }

    /// Ranks reordered to follow `models`; errors unless the model sets match.
    pub fn aligned_to(&self, models: &[String]) -> Result<Vec<f64>> {
        if models.len() != self.models.len() {
            return Err(Error::ModelSetMismatch(format!(
                "{:?} has {} models, expected {}",
                self.source,
                self.models.len(),
                models.len()
            )));
        }
        let index: HashMap<&str, usize> = self
            .models
            .iter()
            .enumerate()
            .map(|(i, m)| (m.as_str(), i))
            .collect();
        models
            .iter()
            .map(|m| {
                index.get(m.as_str()).map(|&i| self.ranks[i]).ok_or_else(|| {
                    Error::ModelSetMismatch(format!("model {m:?} missing from {:?}", self.source))
                })
            })
            .collect()
    }

    /// Models sorted from best (smallest rank) to worst; ties keep input order.
    pub fn ordered(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .models
            .iter()
            .map(String::as_str)
            .zip(self.ranks.iter().copied())
            .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }

    /// `model,rank` CSV; the source name is not part of the file.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "rank"])?;
        for (m, r) in self.models.iter().zip(&self.ranks) {
            w.write_record([m.as_str(), &r.to_string()])?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R, source: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["model", "rank"] {
            return Err(Error::InvalidArgument(
                "rank CSV header must be model,rank".into(),
            ));
        }
        let mut models = Vec::new();
        let mut ranks = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let rank: f64 = rec[1]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad rank {:?}", &rec[1])))?;
            if !rank.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite rank for {:?}", &rec[0])));
            }
            if models.contains(&rec[0].to_string()) {
                return Err(Error::InvalidArgument(format!("duplicate model {:?}", &rec[0])));
            }
            models.push(rec[0].to_string());
            ranks.push(rank);
        }
        if models.is_empty() {
            return Err(Error::InvalidArgument("rank CSV has no rows".into()));
        }
        Ok(RankVector {
            source: source.into(),
            models,
            ranks,
        })
    }

    pub fn read_csv_path(path: &Path, source: impl Into<String>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, source)
    }
}

/// Ascending mid-ranks: the smallest value gets rank 1, ties share the mean position.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Which items of a score table count toward a model's score.
#[derive(Debug, Clone, Copy)]
pub enum ItemFilter<'a> {
    All,
    Items(&'a [String]),
}

/// Mean of the non-missing scores of each model over the filtered items.
pub fn model_means(table: &ScoreTable, filter: ItemFilter<'_>) -> Result<Vec<f64>> {
    let columns: Vec<usize> = match filter {
        ItemFilter::All => (0..table.items().len()).collect(),
        ItemFilter::Items(ids) => ids
            .iter()
            .map(|id| {
                table.item_index(id).ok_or_else(|| {
                    Error::InvalidScores(format!("item {id:?} has no scores"))
                })
            })
            .collect::<Result<_>>()?,
    };
    table
        .models()
        .iter()
        .enumerate()
        .map(|(m, name)| {
            let (sum, n) = columns
                .iter()
                .filter_map(|&i| table.get(m, i))
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n == 0 {
                Err(Error::AllMissing { model: name.clone() })
            } else {
                Ok(sum / n as f64)
            }
        })
        .collect()
}

/// Ranks models by mean score over the filtered items; higher mean is better.
pub fn ranks_from_scores(
    table: &ScoreTable,
    filter: ItemFilter<'_>,
    source: impl Into<String>,
) -> Result<RankVector> {
    let means = model_means(table, filter)?;
    let negated: Vec<f64> = means.iter().map(|m| -m).collect();
    Ok(RankVector {
        source: source.into(),
        models: table.models().to_vec(),
        ranks: mid_ranks(&negated),
    })
}

/// One rank vector per benchmark of `store`, using the store's item-to-benchmark map.
pub fn per_benchmark_ranks(table: &ScoreTable, store: &EmbeddingStore) -> Result<Vec<RankVector>> {
    store
        .rows_by_benchmark()
        .into_iter()
        .map(|(bench, rows)| {
            let ids: Vec<String> = rows
                .iter()
                .map(|&r| store.items()[r].item_id.clone())
                .collect();
            ranks_from_scores(table, ItemFilter::Items(&ids), bench)
        })
        .collect()
}

/// Mean rank of each model across benchmarks. Values stay continuous.
pub fn avg_rank(per_benchmark: &[RankVector]) -> Result<RankVector> {
    let first = per_benchmark
        .first()
        .ok_or_else(|| Error::InvalidArgument("no rank vectors to average".into()))?;
    // running mean, exact when every vector is identical
    let mut mean = first.ranks.clone();
    for (k, v) in per_benchmark.iter().enumerate().skip(1) {
        for (m, r) in mean.iter_mut().zip(v.aligned_to(&first.models)?) {
            *m += (r - *m) / (k + 1) as f64;
        }
    }
    Ok(RankVector {
        source: AVG_RANK.to_string(),
        models: first.models.clone(),
        ranks: mean,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of the mid-rank transforms.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Undefined("need at least two observations".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input".into()));
    }
    pearson(&mid_ranks(a), &mid_ranks(b))
        .ok_or_else(|| Error::Undefined("constant input vector".into()))
}

/// Spearman's rho between two rank vectors, matched by model name.
pub fn spearman_ranks(a: &RankVector, b: &RankVector) -> Result<f64> {
    spearman(&a.ranks, &b.aligned_to(&a.models)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub source: String,
    pub rho: f64,
    /// Population standard deviation over repeats, when the entry aggregates several.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    pub repeats: usize,
}

impl CorrelationEntry {
    /// `0.956±0.002` when repeated, plain `0.956` otherwise.
    pub fn display(&self) -> String {
        match self.std {
            Some(s) => format!("{:.3}±{:.3}", self.rho, s),
            None => format!("{:.3}", self.rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub reference: String,
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationReport {
    pub fn new(reference: impl Into<String>, mut entries: Vec<CorrelationEntry>) -> Self {
        sort_entries(&mut entries);
        CorrelationReport {
            reference: reference.into(),
            entries,
        }
    }

    pub fn push(&mut self, entry: CorrelationEntry) {
        self.entries.push(entry);
        sort_entries(&mut self.entries);
    }

    pub fn rho(&self, source: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.source == source).map(|e| e.rho)
    }

    /// `source,rho` CSV, plus `std,repeats` columns when any entry is repeated.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let repeated = self.entries.iter().any(|e| e.std.is_some());
        let mut w = csv::Writer::from_writer(writer);
        if repeated {
            w.write_record(["source", "rho", "std", "repeats", "display"])?;
        } else {
            w.write_record(["source", "rho"])?;
        }
        for e in &self.entries {
            if repeated {
                let std = e.std.map(|s| s.to_string()).unwrap_or_default();
                w.write_record([
                    e.source.as_str(),
                    &e.rho.to_string(),
                    &std,
                    &e.repeats.to_string(),
                    &e.display(),
                ])?;
            } else {
                w.write_record([e.source.as_str(), &e.rho.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

fn sort_entries(entries: &mut [CorrelationEntry]) {
    entries.sort_by(|a, b| {
        b.rho
            .total_cmp(&a.rho)
            .then_with(|| a.source.cmp(&b.source))
    });
}

/// Correlation of every source with `reference`, best first.
pub fn correlate_all(sources: &[RankVector], reference: &RankVector) -> Result<CorrelationReport> {
    let entries = sources
        .iter()
        .map(|s| {
            Ok(CorrelationEntry {
                source: s.source.clone(),
                rho: spearman_ranks(reference, s)?,
                std: None,
                repeats: 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationReport::new(reference.source.clone(), entries))
}

/// Mean and population standard deviation of the correlations of repeated subsets.
pub fn correlate_repeated(
    label: impl Into<String>,
    repeats: &[RankVector],
    reference: &RankVector,
) -> Result<CorrelationEntry> {
    if repeats.is_empty() {
        return Err(Error::InvalidArgument("no repeats to aggregate".into()));
    }
    let rhos = repeats
        .iter()
        .map(|r| spearman_ranks(reference, r))
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&rhos);
    Ok(CorrelationEntry {
        source: label.into(),
        rho: mean,
        std: Some(std),
        repeats: rhos.len(),
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Splits sources into the better-correlated half (gets the extra one when the
/// count is odd) and the rest. Boundary ties follow the report order, which
/// already breaks rho ties by source name.
pub fn split_upper_lower(report: &CorrelationReport) -> Result<(Vec<String>, Vec<String>)> {
    let k = report.entries.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 sources to split, got {k}"
        )));
    }
    let mut entries: Vec<&CorrelationEntry> = report.entries.iter().collect();
    entries.sort_by(|a, b| match b.rho.total_cmp(&a.rho) {
        Ordering::Equal => a.source.cmp(&b.source),
        o => o,
    });
    let upper_len = k.div_ceil(2);
    let names: Vec<String> = entries.iter().map(|e| e.source.clone()).collect();
    Ok((names[..upper_len].to_vec(), names[upper_len..].to_vec()))
}
