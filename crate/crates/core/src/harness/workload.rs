//! Synthetic datasets and filtered query workloads.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicate::FilterPredicate;
use crate::types::{AttributedDataset, FilteredQuery, Vectors};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorDistribution {
    /// Independent coordinates in `[0, 1)`.
    Uniform,
    /// Independent standard normal coordinates.
    Gaussian,
}

/// How `label_probabilities` become label sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScheme {
    /// One label per point: label `j` with probability `p_j`, otherwise a
    /// uniform pick among the labels without a listed probability.
    Exclusive,
    /// Label `j` carried with probability `p_j`, independently per label.
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub n: usize,
    pub d: usize,
    pub vector_distribution: VectorDistribution,
    /// Inclusive bounds of the numeric attribute.
    pub numeric_attr_domain: (i64, i64),
    pub label_count: u32,
    /// `label_probabilities[j]` belongs to label `j`.
    pub label_probabilities: Vec<f64>,
    pub label_scheme: LabelScheme,
    pub selectivity_levels: Vec<f64>,
    pub query_count: usize,
    pub k: usize,
    pub recall_target: f64,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            n: 10_000,
            d: 32,
            vector_distribution: VectorDistribution::Uniform,
            numeric_attr_domain: (0, 100_000),
            label_count: 500,
            label_probabilities: Vec::new(),
            label_scheme: LabelScheme::Exclusive,
            selectivity_levels: vec![0.001, 0.01, 0.1, 0.5, 1.0],
            query_count: 10_000,
            k: 10,
            recall_target: 0.9,
            seed: 42,
        }
    }
}

const ATTR_STREAM: u64 = 0x6174_7472;
const QUERY_STREAM: u64 = 0x7175_6572;

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::config("n and d must be positive"));
        }
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.numeric_attr_domain.0 > self.numeric_attr_domain.1 {
            return Err(Error::config("attribute domain bounds out of order"));
        }
        if self.label_probabilities.len() > self.label_count as usize {
            return Err(Error::config("more label probabilities than labels"));
        }
        if self.label_probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("label probabilities must lie in [0, 1]"));
        }
        if self.label_scheme == LabelScheme::Exclusive && self.label_probabilities.iter().sum::<f64>() > 1.0 + 1e-9 {
            return Err(Error::config("label probabilities sum above 1"));
        }
        if self.selectivity_levels.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::config("selectivities must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.recall_target) {
            return Err(Error::config("recall target must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Seed for the query stream of selectivity level `level`.
    pub fn query_seed(&self, level: usize) -> u64 {
        self.seed ^ QUERY_STREAM ^ ((level as u64 + 1) << 32)
    }
}

pub fn gen_vectors<R: Rng>(dist: VectorDistribution, count: usize, d: usize, rng: &mut R) -> Vectors {
    let data: Vec<f32> = match dist {
        VectorDistribution::Uniform => (0..count * d).map(|_| rng.random::<f32>()).collect(),
        VectorDistribution::Gaussian => (0..count * d).map(|_| rng.sample(StandardNormal)).collect(),
    };
    Vectors::from_flat(d, data).expect("length is count * d")
}

/// Numeric attributes uniform over the domain, plus label sets.
pub fn gen_attributes(spec: &WorkloadSpec) -> Result<(Vec<i64>, Vec<Vec<u32>>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ ATTR_STREAM);
    let (lo, hi) = spec.numeric_attr_domain;
    let attrs = (0..spec.n).map(|_| rng.random_range(lo..=hi)).collect();
    let p = &spec.label_probabilities;
    let labels = match spec.label_scheme {
        LabelScheme::Independent => (0..spec.n)
            .map(|_| (0..p.len() as u32).filter(|&j| rng.random_bool(p[j as usize])).collect())
            .collect(),
        LabelScheme::Exclusive => {
            let rest = spec.label_count - p.len() as u32;
            (0..spec.n)
                .map(|_| {
                    let mut u: f64 = rng.random();
                    for (j, &pj) in p.iter().enumerate() {
                        if u < pj {
                            return vec![j as u32];
                        }
                        u -= pj;
                    }
                    if rest == 0 {
                        Vec::new()
                    } else {
                        vec![p.len() as u32 + rng.random_range(0..rest)]
                    }
                })
                .collect()
        }
    };
    Ok((attrs, labels))
}

pub fn gen_dataset(spec: &WorkloadSpec) -> Result<AttributedDataset> {
    let (attrs, labels) = gen_attributes(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let v = gen_vectors(spec.vector_distribution, spec.n, spec.d, &mut rng);
    AttributedDataset::new(v, attrs, labels)
}

/// Rank-exact windows of `round(s * n)` points; the predicate bounds are
/// the attribute values at the window edges.
pub fn gen_range_queries<R: Rng>(
    ds: &AttributedDataset,
    s: f64,
    count: usize,
    dist: VectorDistribution,
    k: usize,
    rng: &mut R,
) -> Result<Vec<FilteredQuery>> {
    let n = ds.len();
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::config(format!("selectivity {s} outside (0, 1]")));
    }
    let w = (s * n as f64).round() as usize;
    if w == 0 {
        return Err(Error::config(format!("selectivity {s} selects no point of {n}")));
    }
    let sorted = ds.sorted_attrs();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let start = rng.random_range(0..=n - w);
        let pred = FilterPredicate::range(sorted[start], sorted[start + w - 1])?;
        let q = gen_vectors(dist, 1, ds.dim(), rng);
        out.push(FilteredQuery::new(q.get(0).to_vec(), pred, k)?);
    }
    Ok(out)
}

/// Label whose carrier fraction is closest to `s`; ties go to the smaller
/// label. `None` on an unlabeled dataset.
pub fn label_for_selectivity(ds: &AttributedDataset, s: f64) -> Option<(u32, f64)> {
    let mut counts = std::collections::BTreeMap::<u32, usize>::new();
    for ls in ds.label_sets() {
        for &l in ls {
            *counts.entry(l).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(l, c)| (l, c as f64 / ds.len() as f64))
        .min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs()))
}

/// Queries filtered on the label closest to selectivity `s`.
pub fn gen_label_queries<R: Rng>(
    ds: &AttributedDataset,
    s: f64,
    count: usize,
    dist: VectorDistribution,
    k: usize,
    rng: &mut R,
) -> Result<Vec<FilteredQuery>> {
    let (label, _) = label_for_selectivity(ds, s).ok_or_else(|| Error::config("dataset carries no labels"))?;
    let v = gen_vectors(dist, count, ds.dim(), rng);
    v.iter().map(|q| FilteredQuery::new(q.to_vec(), FilterPredicate::label(label), k)).collect()
}

/// One line per point: `numeric_attr,label1;label2;...`.
pub fn write_attributes(path: &Path, ds: &AttributedDataset) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let mut line = String::new();
    for i in 0..ds.len() as u32 {
        line.clear();
        write!(line, "{},", ds.attr(i)).expect("string write");
        for (j, l) in ds.labels(i).iter().enumerate() {
            if j > 0 {
                line.push(';');
            }
            write!(line, "{l}").expect("string write");
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_attributes(path: &Path) -> Result<(Vec<i64>, Vec<Vec<u32>>)> {
    let mut attrs = Vec::new();
    let mut labels = Vec::new();
    for (no, line) in BufReader::new(std::fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        let bad = |what: &str| Error::Parse(format!("{}:{}: {what}", path.display(), no + 1));
        let (a, ls) = line.split_once(',').ok_or_else(|| bad("missing comma"))?;
        attrs.push(a.trim().parse().map_err(|_| bad("bad numeric attribute"))?);
        let set = ls
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| bad("bad label")))
            .collect::<Result<Vec<u32>>>()?;
        labels.push(set);
    }
    Ok((attrs, labels))
}

pub fn write_queries(path: &Path, queries: &[FilteredQuery]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for q in queries {
        serde_json::to_writer(&mut w, q).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_queries(path: &Path) -> Result<Vec<FilteredQuery>> {
    BufReader::new(std::fs::File::open(path)?)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(no, l)| serde_json::from_str(&l?).map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), no + 1))))
        .collect()
}
