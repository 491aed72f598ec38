use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::base::{kmeans, sampled_mean_distance};
use crate::error::{Error, Result};
use crate::types::{AttributedDataset, FilteredQuery};

pub const HARDNESS_CLUSTERS: usize = 64;
const DISTANCE_PAIRS: usize = 10_000;
const KMEANS_ITERS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    /// Mean top-k truth distance over the mean pairwise distance.
    pub dis_ratio: f64,
    /// Jensen-Shannon divergence, in nats, between the cluster histograms
    /// of the dataset and of the union of queried subsets.
    pub js_div: f64,
}

/// Jensen-Shannon divergence of two count histograms after add-one
/// smoothing. Lies in `[0, ln 2]`.
pub fn js_divergence(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len(), "histograms differ in length");
    let norm = |h: &[u64]| {
        let total = h.iter().sum::<u64>() as f64 + h.len() as f64;
        h.iter().map(|&c| (c as f64 + 1.0) / total).collect::<Vec<f64>>()
    };
    let (p, q) = (norm(a), norm(b));
    let kl = |x: &[f64], m: &[f64]| x.iter().zip(m).map(|(&xi, &mi)| xi * (xi / mi).ln()).sum::<f64>();
    let m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
    (0.5 * kl(&p, &m) + 0.5 * kl(&q, &m)).clamp(0.0, std::f64::consts::LN_2)
}

pub fn dataset_hardness(ds: &AttributedDataset, queries: &[FilteredQuery], truth: &GroundTruth, seed: u64) -> Result<HardnessReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = sampled_mean_distance(ds.vectors(), DISTANCE_PAIRS, &mut rng);
    let per_query: Vec<f64> = truth
        .entries
        .iter()
        .filter(|e| !e.distances.is_empty())
        .map(|e| e.distances.iter().sum::<f64>() / e.distances.len() as f64)
        .collect();
    let dis_ratio = if per_query.is_empty() || spread == 0.0 {
        0.0
    } else {
        per_query.iter().sum::<f64>() / per_query.len() as f64 / spread
    };

    let clusters = HARDNESS_CLUSTERS.min(ds.len());
    let assign = kmeans(ds.vectors(), clusters, KMEANS_ITERS, seed)?.assignments;
    let mut full = vec![0u64; clusters];
    let mut queried = vec![0u64; clusters];
    let mut hit = vec![false; ds.len()];
    for q in queries {
        for (i, h) in hit.iter_mut().enumerate() {
            if !*h && q.predicate.matches(ds.attr(i as u32), ds.labels(i as u32)) {
                *h = true;
            }
        }
    }
    for (i, &c) in assign.iter().enumerate() {
        full[c as usize] += 1;
        if hit[i] {
            queried[c as usize] += 1;
        }
    }
    Ok(HardnessReport {
        dis_ratio,
        js_div: js_divergence(&full, &queried),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ground_truth;
    use crate::predicate::FilterPredicate;
    use crate::types::Vectors;
    use rand::Rng;

    fn blobs() -> AttributedDataset {
        // Two far-apart clusters; attribute 0 marks the first.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rows = Vec::new();
        for i in 0..400 {
            let off = if i < 200 { 0.0 } else { 100.0 };
            rows.push([off + rng.random_range(0.0f32..1.0), rng.random_range(0.0f32..1.0)]);
        }
        let v = Vectors::from_rows(2, &rows).unwrap();
        let attrs = (0..400).map(|i| if i < 200 { 0 } else { 1 }).collect();
        AttributedDataset::new(v, attrs, vec![vec![]; 400]).unwrap()
    }

    #[test]
    fn js_bounds() {
        assert_eq!(js_divergence(&[5, 5, 5], &[5, 5, 5]), 0.0);
        let far = js_divergence(&[1_000_000, 0], &[0, 1_000_000]);
        assert!(far > 0.69 && far <= std::f64::consts::LN_2, "{far}");
    }

    #[test]
    fn unfiltered_queries_have_no_divergence() {
        let ds = blobs();
        let qs = vec![FilteredQuery::new(vec![0.5, 0.5], FilterPredicate::any(), 5).unwrap()];
        let gt = ground_truth(&ds, &qs, 5).unwrap();
        let r = dataset_hardness(&ds, &qs, &gt, 1).unwrap();
        assert_eq!(r.js_div, 0.0);
        assert!(r.dis_ratio > 0.0);
    }

    #[test]
    fn subset_in_its_own_clusters_diverges() {
        let ds = blobs();
        let qs = vec![FilteredQuery::new(vec![0.5, 0.5], FilterPredicate::range(1, 1).unwrap(), 5).unwrap()];
        let gt = ground_truth(&ds, &qs, 5).unwrap();
        let r = dataset_hardness(&ds, &qs, &gt, 1).unwrap();
        assert!(r.js_div > 0.05, "{}", r.js_div);
        // Query sits in the other blob, so its filtered neighbors are about
        // as far as a typical cross-blob pair, twice the mean pair distance.
        assert!(r.dis_ratio > 1.8 && r.dis_ratio < 2.2, "{}", r.dis_ratio);
    }

    #[test]
    fn single_cluster_ratio_matches_hand_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<[f32; 2]> = (0..300).map(|_| [rng.random_range(0.0f32..1.0), rng.random_range(0.0f32..1.0)]).collect();
        let ds = AttributedDataset::new(Vectors::from_rows(2, &rows).unwrap(), vec![0; 300], vec![vec![]; 300]).unwrap();
        let qs = vec![FilteredQuery::new(vec![0.5, 0.5], FilterPredicate::any(), 10).unwrap()];
        let gt = ground_truth(&ds, &qs, 10).unwrap();
        let r = dataset_hardness(&ds, &qs, &gt, 2).unwrap();
        let truth_mean = gt.entries[0].distances.iter().sum::<f64>() / 10.0;
        let mut pairs = 0.0;
        for a in 0..300 {
            for b in 0..300 {
                if a != b {
                    pairs += crate::distance::l2(ds.vector(a), ds.vector(b));
                }
            }
        }
        let exact = truth_mean / (pairs / (300.0 * 299.0));
        assert!((r.dis_ratio - exact).abs() / exact < 0.05, "{} vs {exact}", r.dis_ratio);
    }
}
