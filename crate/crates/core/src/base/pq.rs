use super::kmeans::{kmeans, nearest_centroid};
use crate::distance::l2_squared;
use crate::error::{Error, Result};
use crate::types::Vectors;

/// Product quantizer: `m` subspaces of `dim / m` coordinates, each coded by
/// one byte indexing a codebook of `ksub <= 256` centroids.
#[derive(Clone, Debug, PartialEq)]
pub struct PqCodec {
    pub(crate) m: usize,
    pub(crate) ksub: usize,
    pub(crate) dsub: usize,
    /// `m` codebooks of `ksub` rows each.
    pub(crate) codebooks: Vec<Vectors>,
    /// Largest training-point distance to its centroid, per subspace.
    pub(crate) max_radius: Vec<f64>,
}

impl PqCodec {
    pub fn train(data: &Vectors, m: usize, ksub: usize, seed: u64) -> Result<Self> {
        let d = data.dim();
        if m == 0 || d % m != 0 {
            return Err(Error::config(format!("dimension {d} is not divisible into {m} subspaces")));
        }
        if ksub == 0 || ksub > 256 {
            return Err(Error::config(format!("ksub = {ksub} must be in 1..=256")));
        }
        if data.len() < ksub {
            return Err(Error::config(format!("{} training points for {ksub} centroids", data.len())));
        }
        let dsub = d / m;
        let mut codebooks = Vec::with_capacity(m);
        let mut max_radius = Vec::with_capacity(m);
        for s in 0..m {
            let mut sub = Vectors::new(dsub);
            for v in data.iter() {
                sub.push(&v[s * dsub..(s + 1) * dsub])?;
            }
            let km = kmeans(&sub, ksub, 20, seed.wrapping_add(s as u64))?;
            let radius = sub
                .iter()
                .zip(&km.assignments)
                .map(|(v, &c)| l2_squared(v, km.centroids.get(c as usize)).sqrt())
                .fold(0.0, f64::max);
            codebooks.push(km.centroids);
            max_radius.push(radius);
        }
        Ok(Self {
            m,
            ksub,
            dsub,
            codebooks,
            max_radius,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ksub(&self) -> usize {
        self.ksub
    }

    pub fn dim(&self) -> usize {
        self.m * self.dsub
    }

    pub fn max_radius(&self) -> &[f64] {
        &self.max_radius
    }

    pub fn encode(&self, v: &[f32]) -> Vec<u8> {
        (0..self.m)
            .map(|s| nearest_centroid(&self.codebooks[s], &v[s * self.dsub..(s + 1) * self.dsub]).0 as u8)
            .collect()
    }

    pub fn decode(&self, code: &[u8]) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.dim());
        for (s, &c) in code.iter().enumerate() {
            out.extend_from_slice(self.codebooks[s].get(c as usize));
        }
        out
    }

    /// Squared distances from each query sub-vector to every centroid,
    /// `m * ksub` entries.
    pub fn adc_table(&self, q: &[f32]) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.m * self.ksub);
        for s in 0..self.m {
            let qs = &q[s * self.dsub..(s + 1) * self.dsub];
            t.extend(self.codebooks[s].iter().map(|c| l2_squared(qs, c)));
        }
        t
    }

    #[inline]
    pub fn adc_lookup(&self, table: &[f64], code: &[u8]) -> f64 {
        code.iter()
            .enumerate()
            .map(|(s, &c)| table[s * self.ksub + c as usize])
            .sum::<f64>()
            .sqrt()
    }

    /// Asymmetric distance from a raw query to a code.
    pub fn adc_distance(&self, q: &[f32], code: &[u8]) -> f64 {
        self.adc_lookup(&self.adc_table(q), code)
    }

    pub fn memory_bytes(&self) -> usize {
        self.codebooks.iter().map(Vectors::memory_bytes).sum()
    }

    pub(crate) fn from_parts(m: usize, ksub: usize, dsub: usize, codebooks: Vec<Vectors>, max_radius: Vec<f64>) -> Result<Self> {
        if codebooks.len() != m || max_radius.len() != m || codebooks.iter().any(|c| c.len() != ksub || c.dim() != dsub) {
            return Err(Error::Build("inconsistent PQ codebooks".into()));
        }
        Ok(Self {
            m,
            ksub,
            dsub,
            codebooks,
            max_radius,
        })
    }
}
