//! Exact filtered ground truth, recall, per-phase timing, dataset hardness
//! and the on-disk truth cache.

mod cache;
mod hardness;
mod timing;
mod truth;

pub use cache::{cached_ground_truth, dataset_hash, load_truth, save_truth, workload_hash, TruthKey};
pub use hardness::{dataset_hardness, js_divergence, HardnessReport, HARDNESS_CLUSTERS};
pub use timing::timed_search;
pub use truth::{ground_truth, mean_recall, recall_at_k, GroundTruth, TruthEntry};
