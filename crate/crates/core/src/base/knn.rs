use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::space::Space;
use crate::types::Neighbor;

/// Exact `k` nearest neighbors of every node by full pairwise scan, ties by
/// ascending id.
pub fn build_knn_graph<S: Space>(space: &S, k: usize) -> Result<Adjacency> {
    let n = space.len();
    if n > 0 && k >= n {
        return Err(Error::config(format!("k = {k} must be below n = {n}")));
    }
    let lists = (0..n as u32)
        .into_par_iter()
        .map(|v| {
            let mut all: Vec<Neighbor> = (0..n as u32)
                .filter(|&w| w != v)
                .map(|w| Neighbor::new(w, space.distance(v, w)))
                .collect();
            if k < all.len() {
                all.select_nth_unstable(k);
                all.truncate(k);
            }
            all.sort();
            all.into_iter().map(|c| c.id).collect()
        })
        .collect();
    Ok(Adjacency { lists })
}
