use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::l2;
use crate::error::{Error, Result};
use crate::types::{AttributedDataset, FilteredQuery, Id, Neighbor};

/// Exact filtered top-`k` of one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    /// Ascending `(distance, id)`.
    pub ids: Vec<Id>,
    pub distances: Vec<f64>,
    /// Fewer than `k` points match.
    pub short: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub k: usize,
    pub entries: Vec<TruthEntry>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Linear scan of the predicate-passing points, per query in parallel.
pub fn ground_truth(ds: &AttributedDataset, queries: &[FilteredQuery], k: usize) -> Result<GroundTruth> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if let Some(q) = queries.iter().find(|q| q.vector.len() != ds.dim()) {
        return Err(Error::Dimension {
            expected: ds.dim(),
            got: q.vector.len(),
        });
    }
    let entries = queries
        .par_iter()
        .map(|q| {
            let mut hits: Vec<Neighbor> = (0..ds.len() as Id)
                .filter(|&i| q.predicate.matches(ds.attr(i), ds.labels(i)))
                .map(|i| Neighbor::new(i, l2(&q.vector, ds.vector(i))))
                .collect();
            let short = hits.len() < k;
            if hits.len() > k {
                hits.select_nth_unstable(k);
                hits.truncate(k);
            }
            hits.sort_unstable();
            TruthEntry {
                ids: hits.iter().map(|h| h.id).collect(),
                distances: hits.iter().map(|h| h.distance).collect(),
                short,
            }
        })
        .collect();
    Ok(GroundTruth { k, entries })
}

/// `|result ∩ truth| / |truth|`, counting at most `|truth|` result ids.
pub fn recall_at_k(result: &[Id], truth: &TruthEntry) -> Result<f64> {
    if truth.ids.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let mut want = truth.ids.clone();
    want.sort_unstable();
    let hit = result
        .iter()
        .take(truth.ids.len())
        .filter(|id| want.binary_search(id).is_ok())
        .count();
    Ok(hit as f64 / truth.ids.len() as f64)
}

/// Mean recall over queries with non-empty truth; `None` if there are none.
pub fn mean_recall<'a>(results: impl IntoIterator<Item = &'a [Id]>, truth: &GroundTruth) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for (r, t) in results.into_iter().zip(&truth.entries) {
        if let Ok(x) = recall_at_k(r, t) {
            sum += x;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}
