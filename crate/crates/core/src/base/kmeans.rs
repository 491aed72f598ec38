use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::l2_squared;
use crate::error::{Error, Result};
use crate::types::Vectors;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub centroids: Vectors,
    pub assignments: Vec<u32>,
    pub seed: u64,
}

/// Index and squared distance of the closest centroid, ties to the lower
/// index.
pub fn nearest_centroid(centroids: &Vectors, v: &[f32]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (c, row) in centroids.iter().enumerate() {
        let d = l2_squared(v, row);
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best
}

/// Lloyd iterations from k-means++ seeding.
pub fn kmeans(data: &Vectors, k: usize, iters: usize, seed: u64) -> Result<KMeans> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(Error::config(format!("k-means needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let d = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut chosen = vec![rng.random_range(0..n)];
    let mut closest: Vec<f64> = data.iter().map(|v| l2_squared(v, data.get(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        let c = data.get(next);
        for (i, v) in data.iter().enumerate() {
            closest[i] = closest[i].min(l2_squared(v, c));
        }
    }
    let mut centroids = Vectors::new(d);
    for &c in &chosen {
        centroids.push(data.get(c))?;
    }

    let mut assignments = vec![0u32; n];
    for _ in 0..iters {
        let assigned: Vec<(u32, f64)> = (0..n).into_par_iter().map(|i| nearest_centroid(&centroids, data.get(i))).collect();
        for (a, (c, _)) in assignments.iter_mut().zip(&assigned) {
            *a = *c;
        }
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c as usize] += 1;
            for (s, &x) in sums[c as usize * d..(c as usize + 1) * d].iter_mut().zip(data.get(i)) {
                *s += f64::from(x);
            }
        }
        // Empty clusters take the points farthest from their centroids.
        let mut far: Vec<usize> = (0..n).collect();
        far.sort_by(|&a, &b| assigned[b].1.total_cmp(&assigned[a].1).then(a.cmp(&b)));
        let mut far = far.into_iter();
        let mut flat = Vec::with_capacity(k * d);
        for c in 0..k {
            if counts[c] == 0 {
                let p = far.next().unwrap_or(0);
                flat.extend_from_slice(data.get(p));
            } else {
                flat.extend(sums[c * d..(c + 1) * d].iter().map(|s| (s / counts[c] as f64) as f32));
            }
        }
        centroids = Vectors::from_flat(d, flat)?;
    }
    for (i, a) in assignments.iter_mut().enumerate() {
        *a = nearest_centroid(&centroids, data.get(i)).0;
    }
    Ok(KMeans {
        centroids,
        assignments,
        seed,
    })
}
