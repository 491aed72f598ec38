//! Unfiltered baseline indexes and quantizers.

mod hnsw;
mod ivf;
mod kmeans;
mod knn;
mod pq;
mod vamana;

pub use hnsw::{Hnsw, HnswParams, Layer};
pub use ivf::{IvfIndex, IvfParams};
pub use kmeans::{kmeans, nearest_centroid, KMeans};
pub use knn::build_knn_graph;
pub use pq::PqCodec;
pub use vamana::{Vamana, VamanaParams};


use rand::seq::IndexedRandom;
use rand::Rng;

use crate::space::Space;

/// The candidate minimizing its summed distance to a random sample of at
/// most `sample` candidates. Ties go to the smaller id.
pub fn sampled_medoid<S: Space + ?Sized, R: Rng>(space: &S, candidates: &[u32], sample: usize, rng: &mut R) -> u32 {
    assert!(!candidates.is_empty(), "medoid of an empty set");
    let picks: Vec<u32> = candidates.choose_multiple(rng, sample.min(candidates.len())).copied().collect();
    let mut best = (f64::INFINITY, u32::MAX);
    for &c in candidates {
        let s: f64 = picks.iter().map(|&p| space.distance(c, p)).sum();
        if (s, c) < best {
            best = (s, c);
        }
    }
    best.1
}

/// Mean distance over `pairs` uniformly drawn pairs of distinct nodes; zero
/// when fewer than two nodes exist.
pub fn sampled_mean_distance<S: Space + ?Sized, R: Rng>(space: &S, pairs: usize, rng: &mut R) -> f64 {
    let n = space.len() as u32;
    if n < 2 || pairs == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for _ in 0..pairs {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        total += space.distance(a, b);
    }
    total / pairs as f64
}
