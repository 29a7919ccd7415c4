//! The `EMB1` binary embedding format and its JSON Lines metadata sidecar.
//!
//! Layout (all little-endian): 4 magic bytes `EMB1`, `u32` row count, `u32`
//! dimension, then `count * dim` `f32` values in row-major order. Metadata lives
//! next to the binary file at `<path>.meta.jsonl`, one object per row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::store::{EmbeddingStore, ItemMeta};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: u64 = 12;

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.jsonl");
    PathBuf::from(s)
}

pub fn write_embeddings(store: &EmbeddingStore, path: &Path) -> Result<()> {
    store.validate()?;
    let count = u32::try_from(store.count())
        .map_err(|_| Error::InvalidStore("row count exceeds u32".into()))?;
    let dim = u32::try_from(store.dim())
        .map_err(|_| Error::InvalidStore("dimension exceeds u32".into()))?;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(MAGIC)?;
    put(&count.to_le_bytes())?;
    put(&dim.to_le_bytes())?;
    for v in store.data() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let mpath = meta_path(path);
    let file = File::create(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let mut w = BufWriter::new(file);
    for item in store.items() {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(&mpath, e))?;
    }
    w.flush().map_err(|e| Error::io(&mpath, e))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingStore> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let found = bytes.len() as u64;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if found < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found,
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let count = word(4) as usize;
    let dim = word(8) as usize;
    let expected = HEADER_LEN + 4 * count as u64 * dim as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes {
            extra: found - expected,
        });
    }
    let data: Vec<f32> = bytes[HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let items = read_meta(&meta_path(path))?;
    if items.len() != count {
        return Err(Error::MetaCountMismatch {
            meta: items.len(),
            header: count,
        });
    }
    EmbeddingStore::new(dim, data, items)
}

fn read_meta(path: &Path) -> Result<Vec<ItemMeta>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| Error::Metadata {
            line: n + 1,
            source,
        })?;
        items.push(item);
    }
    Ok(items)
}
