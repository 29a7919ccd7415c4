//! Item embeddings, metadata, model score tables and their on-disk formats.

mod format;
mod scores;
mod store;

pub use format::{meta_path, read_embeddings, write_embeddings, MAGIC};
pub use scores::{ScoreRange, ScoreTable};
pub use store::{EmbeddingStore, ItemMeta, Part, PartSet, TaskFormat};
