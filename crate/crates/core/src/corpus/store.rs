use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskFormat {
    #[serde(rename = "MCQ")]
    Mcq,
    #[serde(rename = "VQA")]
    Vqa,
}

impl TaskFormat {
    pub fn name(self) -> &'static str {
        match self {
            TaskFormat::Mcq => "MCQ",
            TaskFormat::Vqa => "VQA",
        }
    }
}

/// One modality of a benchmark item. The derived ordering is the canonical
/// concatenation order: image, question, answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Image,
    Question,
    Answer,
}

pub type PartSet = BTreeSet<Part>;

impl Part {
    pub const ALL: [Part; 3] = [Part::Image, Part::Question, Part::Answer];

    pub fn name(self) -> &'static str {
        match self {
            Part::Image => "image",
            Part::Question => "question",
            Part::Answer => "answer",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Part::Image => 'I',
            Part::Question => 'Q',
            Part::Answer => 'A',
        }
    }

    /// Short label for a combination of parts, e.g. `I+Q`.
    pub fn combo_label(parts: &PartSet) -> String {
        parts
            .iter()
            .map(|p| p.letter().to_string())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Parses `image,question`, `I+Q`, `iq` and similar spellings.
    pub fn parse_set(s: &str) -> Result<PartSet> {
        let tokens: Vec<&str> = s
            .split([',', '+'])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .collect();
        let mut set = PartSet::new();
        for token in tokens {
            match token.parse::<Part>() {
                Ok(p) => {
                    set.insert(p);
                }
                Err(e) => {
                    // compact letter form such as "iqa"
                    if token.chars().all(|c| "iqaIQA".contains(c)) {
                        for c in token.chars() {
                            set.insert(c.to_string().parse()?);
                        }
                    } else {
                        return Err(e);
                    }
                }
            }
        }
        if set.is_empty() {
            return Err(Error::InvalidArgument(format!("empty part set {s:?}")));
        }
        Ok(set)
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "image" | "i" => Ok(Part::Image),
            "question" | "q" => Ok(Part::Question),
            "answer" | "a" => Ok(Part::Answer),
            _ => Err(Error::InvalidArgument(format!("unknown part {s:?}"))),
        }
    }
}

/// Per-row metadata.
///
/// `part_offsets` describes the layout of the row as `(offset, length)` spans that
/// tile `[0, dim)`. `parts` lists the modalities that carry real content; a span may
/// exist for a part that is absent (zero-filled by the producer), but every
/// available part must have a span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub item_id: String,
    pub benchmark: String,
    pub task_format: TaskFormat,
    pub parts: PartSet,
    pub part_offsets: BTreeMap<Part, (usize, usize)>,
}

impl ItemMeta {
    /// Metadata for a row laid out as consecutive parts of the given lengths.
    pub fn with_layout(
        item_id: impl Into<String>,
        benchmark: impl Into<String>,
        task_format: TaskFormat,
        layout: &[(Part, usize)],
    ) -> Self {
        let mut offset = 0;
        let mut part_offsets = BTreeMap::new();
        for &(part, len) in layout {
            part_offsets.insert(part, (offset, len));
            offset += len;
        }
        ItemMeta {
            item_id: item_id.into(),
            benchmark: benchmark.into(),
            task_format,
            parts: layout.iter().map(|&(p, _)| p).collect(),
            part_offsets,
        }
    }

    fn check_layout(&self, dim: usize) -> Result<()> {
        let mut spans: Vec<(usize, usize)> = self.part_offsets.values().copied().collect();
        spans.sort_unstable();
        let mut cursor = 0;
        for (offset, len) in spans {
            if len == 0 || offset != cursor {
                return Err(Error::InvalidStore(format!(
                    "item {:?}: part spans must be non-empty, disjoint and contiguous",
                    self.item_id
                )));
            }
            cursor += len;
        }
        if cursor != dim {
            return Err(Error::InvalidStore(format!(
                "item {:?}: part spans cover {cursor} of {dim} columns",
                self.item_id
            )));
        }
        if let Some(p) = self.parts.iter().find(|p| !self.part_offsets.contains_key(p)) {
            return Err(Error::InvalidStore(format!(
                "item {:?}: part {p} listed without an offset",
                self.item_id
            )));
        }
        Ok(())
    }
}

/// Dense row-major `f32` embedding matrix with one [`ItemMeta`] per row.
///
/// Construction validates every invariant, so a store value is always well formed.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    data: Vec<f32>,
    items: Vec<ItemMeta>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, data: Vec<f32>, items: Vec<ItemMeta>) -> Result<Self> {
        let store = EmbeddingStore { dim, data, items };
        store.validate()?;
        Ok(store)
    }

    /// Bypasses validation so writers can be tested against malformed input.
    #[cfg(test)]
    pub(crate) fn new_unchecked(dim: usize, data: Vec<f32>, items: Vec<ItemMeta>) -> Self {
        EmbeddingStore { dim, data, items }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidStore("dim must be positive".into()));
        }
        if self.items.is_empty() {
            return Err(Error::InvalidStore("store must hold at least one item".into()));
        }
        if self.data.len() != self.items.len() * self.dim {
            return Err(Error::InvalidStore(format!(
                "data length {} != {} items x {} dims",
                self.data.len(),
                self.items.len(),
                self.dim
            )));
        }
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / self.dim,
                col: pos % self.dim,
            });
        }
        let mut ids = HashSet::with_capacity(self.items.len());
        let mut formats: HashMap<&str, TaskFormat> = HashMap::new();
        for item in &self.items {
            if !ids.insert(item.item_id.as_str()) {
                return Err(Error::InvalidStore(format!(
                    "duplicate item id {:?}",
                    item.item_id
                )));
            }
            item.check_layout(self.dim)?;
            let format = formats.entry(&item.benchmark).or_insert(item.task_format);
            if *format != item.task_format {
                return Err(Error::InvalidStore(format!(
                    "benchmark {:?} mixes task formats",
                    item.benchmark
                )));
            }
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.items.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn items(&self) -> &[ItemMeta] {
        &self.items
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Benchmark labels in order of first appearance.
    pub fn benchmarks(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.items
            .iter()
            .filter(|m| seen.insert(m.benchmark.as_str()))
            .map(|m| m.benchmark.clone())
            .collect()
    }

    /// Row indices grouped by benchmark, in first-appearance order.
    pub fn rows_by_benchmark(&self) -> Vec<(String, Vec<usize>)> {
        let mut order: Vec<(String, Vec<usize>)> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for (i, m) in self.items.iter().enumerate() {
            let k = *slot.entry(&m.benchmark).or_insert_with(|| {
                order.push((m.benchmark.clone(), Vec::new()));
                order.len() - 1
            });
            order[k].1.push(i);
        }
        order
    }

    /// Parts available on every item.
    pub fn common_parts(&self) -> PartSet {
        let mut iter = self.items.iter();
        let first = iter.next().map(|m| m.parts.clone()).unwrap_or_default();
        iter.fold(first, |acc, m| acc.intersection(&m.parts).copied().collect())
    }

    /// New store holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        let mut items = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.count() {
                return Err(Error::InvalidArgument(format!(
                    "row {r} out of range for {} items",
                    self.count()
                )));
            }
            data.extend_from_slice(self.row(r));
            items.push(self.items[r].clone());
        }
        EmbeddingStore::new(self.dim, data, items)
    }

    /// Keeps only the requested parts, concatenated in canonical order.
    pub fn select_parts(&self, parts: &PartSet) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("no parts requested".into()));
        }
        let mut new_dim = None;
        let mut data = Vec::new();
        let mut items = Vec::with_capacity(self.count());
        for (i, item) in self.items.iter().enumerate() {
            let row = self.row(i);
            let mut layout = Vec::with_capacity(parts.len());
            let start = data.len();
            for &part in parts {
                let span = item
                    .parts
                    .contains(&part)
                    .then(|| item.part_offsets.get(&part))
                    .flatten()
                    .ok_or_else(|| Error::MissingPart {
                        item: item.item_id.clone(),
                        part,
                    })?;
                data.extend_from_slice(&row[span.0..span.0 + span.1]);
                layout.push((part, span.1));
            }
            let row_dim = data.len() - start;
            match new_dim {
                None => new_dim = Some(row_dim),
                Some(d) if d != row_dim => {
                    return Err(Error::InvalidStore(format!(
                        "item {:?}: selected parts span {row_dim} columns, others span {d}",
                        item.item_id
                    )))
                }
                Some(_) => {}
            }
            items.push(ItemMeta::with_layout(
                item.item_id.clone(),
                item.benchmark.clone(),
                item.task_format,
                &layout,
            ));
        }
        EmbeddingStore::new(new_dim.unwrap_or(0), data, items)
    }

    /// Row-major copy of the matrix widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }
}
