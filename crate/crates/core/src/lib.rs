//! Tools for efficient benchmark evaluation in embedding space.
//!
//! The crate covers four steps of the workflow:
//!
//! * [`corpus`] holds item embeddings, per-item model scores and their file formats.
//! * [`probe`] trains a linear softmax classifier that predicts which benchmark an
//!   item came from, a direct measure of how separable benchmarks are.
//! * [`sampler`] selects compact evaluation subsets with farthest point sampling
//!   or a size-proportional random baseline.
//! * [`ranking`] turns scores into model ranks, averages them across benchmarks and
//!   compares orderings with Spearman's rank correlation.
//!
//! [`synth`] generates synthetic worlds with known ground truth and [`experiment`]
//! runs the subset-size sweeps and source-split studies on top of them.

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod probe;
pub mod ranking;
pub mod sampler;
pub mod synth;

mod seed;

pub use error::{Error, Result};
