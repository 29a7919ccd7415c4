use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Closed interval that every present score must fall in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
}

impl Default for ScoreRange {
    fn default() -> Self {
        ScoreRange { min: 0.0, max: 1.0 }
    }
}

impl ScoreRange {
    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v >= self.min && v <= self.max
    }
}

/// Models x items score matrix with a missing-cell mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    models: Vec<String>,
    items: Vec<String>,
    cells: Vec<Option<f64>>,
    range: ScoreRange,
    item_index: HashMap<String, usize>,
}

impl ScoreTable {
    /// `cells` is model-major: `cells[m * items.len() + i]`.
    pub fn new(
        models: Vec<String>,
        items: Vec<String>,
        cells: Vec<Option<f64>>,
        range: ScoreRange,
    ) -> Result<Self> {
        if models.is_empty() || items.is_empty() {
            return Err(Error::InvalidScores("need at least one model and one item".into()));
        }
        if cells.len() != models.len() * items.len() {
            return Err(Error::InvalidScores(format!(
                "{} cells for {} models x {} items",
                cells.len(),
                models.len(),
                items.len()
            )));
        }
        let mut seen = HashMap::new();
        for m in &models {
            if seen.insert(m.as_str(), ()).is_some() {
                return Err(Error::InvalidScores(format!("duplicate model {m:?}")));
            }
        }
        let mut item_index = HashMap::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if item_index.insert(it.clone(), i).is_some() {
                return Err(Error::InvalidScores(format!("duplicate item {it:?}")));
            }
        }
        for (k, c) in cells.iter().enumerate() {
            if let Some(v) = *c {
                if !range.contains(v) {
                    return Err(Error::InvalidScores(format!(
                        "score {v} for model {:?} item {:?} outside [{}, {}]",
                        models[k / items.len()],
                        items[k % items.len()],
                        range.min,
                        range.max
                    )));
                }
            }
        }
        Ok(ScoreTable {
            models,
            items,
            cells,
            range,
            item_index,
        })
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn range(&self) -> ScoreRange {
        self.range
    }

    pub fn item_index(&self, item_id: &str) -> Option<usize> {
        self.item_index.get(item_id).copied()
    }

    pub fn get(&self, model: usize, item: usize) -> Option<f64> {
        self.cells[model * self.items.len() + item]
    }

    /// Reads `model,item_id,score[,missing]` CSV. Lines starting with `#` are
    /// comments. Cells never mentioned are missing; a truthy `missing` flag marks a
    /// cell missing regardless of its score field.
    pub fn read_csv<R: Read>(reader: R, range: ScoreRange) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(mc), Some(ic), Some(sc)) = (col("model"), col("item_id"), col("score")) else {
            return Err(Error::InvalidScores(
                "header must contain model,item_id,score".into(),
            ));
        };
        let missing_col = col("missing");

        let mut models: Vec<String> = Vec::new();
        let mut model_idx: HashMap<String, usize> = HashMap::new();
        let mut items: Vec<String> = Vec::new();
        let mut item_idx: HashMap<String, usize> = HashMap::new();
        let mut entries: Vec<(usize, usize, Option<f64>)> = Vec::new();

        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = n + 2;
            let field = |c: usize| rec.get(c).unwrap_or("");
            let model = field(mc);
            let item = field(ic);
            if model.is_empty() || item.is_empty() {
                return Err(Error::InvalidScores(format!("line {line}: empty model or item_id")));
            }
            let missing = match missing_col.map(field).unwrap_or("") {
                "" | "0" | "false" | "False" | "FALSE" => false,
                "1" | "true" | "True" | "TRUE" => true,
                other => {
                    return Err(Error::InvalidScores(format!(
                        "line {line}: bad missing flag {other:?}"
                    )))
                }
            };
            let score = if missing {
                None
            } else {
                let raw = field(sc);
                Some(raw.parse::<f64>().map_err(|_| {
                    Error::InvalidScores(format!("line {line}: bad score {raw:?}"))
                })?)
            };
            let m = *model_idx.entry(model.to_string()).or_insert_with(|| {
                models.push(model.to_string());
                models.len() - 1
            });
            let i = *item_idx.entry(item.to_string()).or_insert_with(|| {
                items.push(item.to_string());
                items.len() - 1
            });
            entries.push((m, i, score));
        }

        let mut cells = vec![None; models.len() * items.len()];
        let mut filled = vec![false; cells.len()];
        for (m, i, score) in entries {
            let k = m * items.len() + i;
            if filled[k] {
                return Err(Error::InvalidScores(format!(
                    "duplicate cell for model {:?} item {:?}",
                    models[m], items[i]
                )));
            }
            filled[k] = true;
            cells[k] = score;
        }
        ScoreTable::new(models, items, cells, range)
    }

    pub fn read_csv_path(path: &Path, range: ScoreRange) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, range)
    }

    /// Writes every cell, model-major, with an explicit `missing` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "item_id", "score", "missing"])?;
        for (m, model) in self.models.iter().enumerate() {
            for (i, item) in self.items.iter().enumerate() {
                match self.get(m, i) {
                    Some(v) => w.write_record([model, item, &v.to_string(), "0"])?,
                    None => w.write_record([model.as_str(), item, "", "1"])?,
                }
            }
        }
        w.flush().map_err(|e| Error::InvalidScores(e.to_string()))
    }
}
