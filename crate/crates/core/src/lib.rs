//! Filtered approximate nearest neighbor search.
//!
//! The crate is organized around a shared graph kernel (beam search, edge
//! pruning rules, entry-point selection) that every graph index builds on:
//!
//! - [`base`]: HNSW, Vamana, exact kNN graphs, IVF and product quantization.
//! - [`range`]: numeric range filtering (segmented edges, segment-tree
//!   subgraphs, segmented HNSW with threshold dispatch).
//! - [`label`]: label filtering (filtered and stitched Vamana, joint distance).
//! - [`filter`]: arbitrary predicates compiled to membership bitmaps and the
//!   pre/post/joint filtering strategies, plus two-hop and partitioned indexes.
//! - [`eval`]: exact filtered ground truth, recall, hardness and phase timing.
//! - [`persist`]: versioned binary container for built indexes.
//! - [`harness`]: workload generation, vector file IO, ef tuning and the
//!   benchmark runner.

pub mod base;
mod codec;
pub mod distance;
pub mod error;
pub mod eval;
pub mod filter;
pub mod graph;
pub mod harness;
pub mod label;
pub mod persist;
pub mod predicate;
pub mod range;
pub mod space;
pub mod types;

pub use distance::{l2_distance, Phase, PhaseTimes, Probe};
pub use error::{Error, Result};
pub use predicate::{exact_selectivity, FilterPredicate};
pub use types::{AttributedDataset, DataPoint, FilteredQuery, Id, Neighbor, SearchResult, Vectors};
