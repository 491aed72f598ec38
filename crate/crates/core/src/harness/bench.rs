//! Experiment runner: for each (method, selectivity) build or load the
//! index, compute or load ground truth, tune the knob and emit a row.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::methods::{BuiltIndex, FilterKind, Method, MethodConfig};
use super::tune::{tune_ef_for_recall, Tuned, DEFAULT_EF_CAP};
use super::vecs::{read_vectors, VecsKind};
use super::workload::{gen_dataset, gen_label_queries, gen_range_queries, read_attributes, WorkloadSpec};
use crate::error::{Error, Result};
use crate::eval::{cached_ground_truth, dataset_hash, ground_truth, GroundTruth};
use crate::persist;
use crate::types::{AttributedDataset, FilteredQuery};

/// Bumped whenever the [`BenchRow`] column set changes.
pub const BENCH_SCHEMA_VERSION: u32 = 1;
pub const BENCH_COLUMNS: [&str; 10] = [
    "method",
    "selectivity",
    "recall",
    "qps",
    "mean_comparisons",
    "ef_used",
    "build_seconds",
    "index_bytes",
    "peak_memory_estimate",
    "failed",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    /// Method name, with `[key=value]` suffixes for component-study overrides.
    pub method: String,
    #[serde(deserialize_with = "null_as_nan")]
    pub selectivity: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub recall: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub qps: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub mean_comparisons: f64,
    pub ef_used: usize,
    #[serde(deserialize_with = "null_as_nan")]
    pub build_seconds: f64,
    pub index_bytes: u64,
    /// Index plus dataset plus per-query scratch.
    pub peak_memory_estimate: u64,
    /// Recall target missed at the knob cap, or the method errored.
    pub failed: bool,
}

impl BenchRow {
    fn failure(method: &str, selectivity: f64) -> Self {
        Self {
            method: method.to_string(),
            selectivity,
            recall: f64::NAN,
            qps: f64::NAN,
            mean_comparisons: f64::NAN,
            ef_used: 0,
            build_seconds: f64::NAN,
            index_bytes: 0,
            peak_memory_estimate: 0,
            failed: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub workload: WorkloadSpec,
    /// Directory holding `base.fvecs` and `attrs.txt`; generated from
    /// `workload` when absent.
    pub dataset: Option<PathBuf>,
    pub filter: FilterKind,
    pub methods: Vec<String>,
    pub ef_cap: usize,
    /// Entry-point sweep for the segmented-edge method; empty keeps its
    /// configured count.
    pub ep_counts: Vec<usize>,
    /// Pruning rule forced onto every method that takes one.
    pub prune: Option<String>,
    pub truth_cache: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    /// Applied to every method before its own block.
    pub defaults: toml::Table,
    /// Per-method blocks keyed by method name.
    pub method: BTreeMap<String, toml::Table>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            workload: WorkloadSpec::default(),
            dataset: None,
            filter: FilterKind::Range,
            methods: Vec::new(),
            ef_cap: DEFAULT_EF_CAP,
            ep_counts: Vec::new(),
            prune: None,
            truth_cache: None,
            index_dir: None,
            defaults: toml::Table::new(),
            method: BTreeMap::new(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// `defaults`, then the method's block, then the global prune override.
    pub fn method_config(&self, method: Method) -> Result<MethodConfig> {
        let mut table = self.defaults.clone();
        if let Some(own) = self.method.get(method.name()) {
            table.extend(own.clone());
        }
        let mut cfg: MethodConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("{method}: {e}")))?;
        if self.prune.is_some() && method.accepts_prune() {
            cfg.prune = self.prune.clone();
        }
        cfg.prune_override()?;
        Ok(cfg)
    }

    pub fn load_dataset(&self) -> Result<AttributedDataset> {
        match &self.dataset {
            None => gen_dataset(&self.workload),
            Some(dir) => load_dataset_dir(dir),
        }
    }
}

/// Reads `base.fvecs` and `attrs.txt` from `dir`.
pub fn load_dataset_dir(dir: &Path) -> Result<AttributedDataset> {
    let v = read_vectors(&dir.join("base.fvecs"), VecsKind::F32)?;
    let (attrs, labels) = read_attributes(&dir.join("attrs.txt"))?;
    AttributedDataset::new(v, attrs, labels)
}

/// One selectivity level's queries and their exact answers.
pub struct Workload {
    pub selectivity: f64,
    pub queries: Vec<FilteredQuery>,
    pub truth: GroundTruth,
}

pub fn gen_workload(ds: &AttributedDataset, spec: &WorkloadSpec, kind: FilterKind, level: usize, cache: Option<&Path>) -> Result<Workload> {
    let s = spec.selectivity_levels[level];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.query_seed(level));
    let queries = match kind {
        FilterKind::Range => gen_range_queries(ds, s, spec.query_count, spec.vector_distribution, spec.k, &mut rng)?,
        FilterKind::Label => gen_label_queries(ds, s, spec.query_count, spec.vector_distribution, spec.k, &mut rng)?,
    };
    let truth = match cache {
        Some(dir) => cached_ground_truth(dir, ds, &queries, spec.k)?,
        None => ground_truth(ds, &queries, spec.k)?,
    };
    Ok(Workload {
        selectivity: s,
        queries,
        truth,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Predicate-violating ids per method label, summed over the run.
    pub violations: BTreeMap<String, u64>,
    /// Rows whose tuning saw recall drop as the knob doubled.
    pub non_monotone: Vec<(String, f64)>,
    /// Full tuning outcome per row, aligned with `rows` (absent on errors).
    pub tuned: Vec<Option<Tuned>>,
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    let ds = config.load_dataset()?;
    run_benchmark_on(&ds, config)
}

pub fn run_benchmark_on(ds: &AttributedDataset, config: &BenchConfig) -> Result<BenchReport> {
    config.workload.validate()?;
    let methods = config.methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
    let levels: Vec<Result<Workload>> = (0..config.workload.selectivity_levels.len())
        .map(|i| gen_workload(ds, &config.workload, config.filter, i, config.truth_cache.as_deref()))
        .collect();
    let mut report = BenchReport::default();
    for method in methods {
        run_method(ds, config, method, &levels, &mut report)?;
    }
    Ok(report)
}

fn run_method(ds: &AttributedDataset, config: &BenchConfig, method: Method, levels: &[Result<Workload>], report: &mut BenchReport) -> Result<()> {
    let cfg = config.method_config(method)?;
    let mut label = method.name().to_string();
    if let (Some(p), true) = (&config.prune, method.accepts_prune()) {
        write!(label, "[prune={p}]").expect("string write");
    }
    let fail_all = |report: &mut BenchReport, label: &str, why: &dyn std::fmt::Display| {
        log::warn!("{label}: {why}");
        for s in &config.workload.selectivity_levels {
            report.rows.push(BenchRow::failure(label, *s));
            report.tuned.push(None);
        }
    };
    if !method.supports(config.filter) {
        fail_all(report, &label, &format!("does not serve {:?} predicates", config.filter));
        return Ok(());
    }
    let start = Instant::now();
    let mut index = match obtain_index(ds, config, method, &cfg, &label) {
        Ok(i) => i,
        Err(e) => {
            fail_all(report, &label, &e);
            return Ok(());
        }
    };
    let build_seconds = start.elapsed().as_secs_f64();
    let index_bytes = index.memory_bytes() as u64;
    let peak = index_bytes + dataset_bytes(ds) + 8 * ds.len() as u64;
    log::info!("{label}: built in {build_seconds:.2}s, {index_bytes} bytes");

    let sweep: Vec<Option<usize>> = if method == Method::SegmentedEdge && !config.ep_counts.is_empty() {
        config.ep_counts.iter().map(|&e| Some(e)).collect()
    } else {
        vec![None]
    };
    for ep in sweep {
        let mut name = label.clone();
        if let Some(ep) = ep {
            index.set_ep_count(ep);
            write!(name, "[ep={ep}]").expect("string write");
        }
        for level in levels {
            let w = match level {
                Ok(w) => w,
                Err(e) => {
                    log::warn!("{name}: workload unavailable: {e}");
                    report.rows.push(BenchRow::failure(&name, f64::NAN));
                    report.tuned.push(None);
                    continue;
                }
            };
            match tune_ef_for_recall(&index, ds, &w.queries, &w.truth, config.workload.recall_target, config.ef_cap) {
                Ok(t) => {
                    *report.violations.entry(name.clone()).or_default() += t.measurement.violations;
                    if !t.monotonicity_violations.is_empty() {
                        report.non_monotone.push((name.clone(), w.selectivity));
                    }
                    log::info!(
                        "{name} s={}: ef={} recall={:.4} qps={:.0} cmp={:.1}{}",
                        w.selectivity,
                        t.ef,
                        t.measurement.recall,
                        t.measurement.qps,
                        t.measurement.mean_comparisons,
                        if t.failed { " FAILED" } else { "" }
                    );
                    report.rows.push(BenchRow {
                        method: name.clone(),
                        selectivity: w.selectivity,
                        recall: t.measurement.recall,
                        qps: t.measurement.qps,
                        mean_comparisons: t.measurement.mean_comparisons,
                        ef_used: t.ef,
                        build_seconds,
                        index_bytes,
                        peak_memory_estimate: peak,
                        failed: t.failed,
                    });
                    report.tuned.push(Some(t));
                }
                Err(e) => {
                    log::warn!("{name} s={}: {e}", w.selectivity);
                    report.rows.push(BenchRow::failure(&name, w.selectivity));
                    report.tuned.push(None);
                }
            }
        }
    }
    Ok(())
}

/// Loads a stored index from `index_dir` when one matches, otherwise builds
/// and stores it.
fn obtain_index(ds: &AttributedDataset, config: &BenchConfig, method: Method, cfg: &MethodConfig, label: &str) -> Result<BuiltIndex> {
    let Some(dir) = &config.index_dir else {
        return BuiltIndex::build(method, ds, cfg);
    };
    let hash: String = dataset_hash(ds).iter().take(8).map(|b| format!("{b:02x}")).collect();
    let path = dir.join(format!("{}-{hash}.fann", label.replace(['[', ']', '='], "_")));
    if path.exists() {
        let (_, stored) = persist::load(&path)?;
        log::info!("{label}: loaded {}", path.display());
        return BuiltIndex::from_stored(method, stored);
    }
    let index = BuiltIndex::build(method, ds, cfg)?;
    if let Some(stored) = index.to_stored(cfg) {
        std::fs::create_dir_all(dir)?;
        persist::save(&path, &stored, ds.dim())?;
    }
    Ok(index)
}

fn dataset_bytes(ds: &AttributedDataset) -> u64 {
    let labels: usize = ds.label_sets().iter().map(|l| l.len() * 4 + std::mem::size_of::<Vec<u32>>()).sum();
    (ds.vectors().memory_bytes() + ds.len() * 16 + labels) as u64
}

pub fn write_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if rows.is_empty() {
        w.write_record(BENCH_COLUMNS).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != BENCH_COLUMNS {
        return Err(Error::Parse(format!("unexpected result columns {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn write_jsonl(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<BenchRow>> {
    BufReader::new(std::fs::File::open(path)?)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| serde_json::from_str(&l?).map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

/// Writes `out` in the format its extension names and the other format
/// next to it; returns `(csv, jsonl)` paths.
pub fn write_results(out: &Path, rows: &[BenchRow]) -> Result<(PathBuf, PathBuf)> {
    let is_jsonl = out.extension().is_some_and(|e| e == "jsonl");
    let (csv_path, jsonl_path) = if is_jsonl {
        (out.with_extension("csv"), out.to_path_buf())
    } else {
        (out.to_path_buf(), out.with_extension("jsonl"))
    };
    write_csv(&csv_path, rows)?;
    write_jsonl(&jsonl_path, rows)?;
    Ok((csv_path, jsonl_path))
}

/// Plain-text table, one line per row.
pub fn format_report(rows: &[BenchRow]) -> String {
    let mut s = format!(
        "{:<36} {:>8} {:>7} {:>10} {:>10} {:>6} {:>9} {:>12}\n",
        "method", "sel", "recall", "qps", "cmp", "ef", "build_s", "index_bytes"
    );
    for r in rows {
        let status = if r.failed { "  failed" } else { "" };
        writeln!(
            s,
            "{:<36} {:>8.4} {:>7.4} {:>10.0} {:>10.1} {:>6} {:>9.2} {:>12}{status}",
            r.method, r.selectivity, r.recall, r.qps, r.mean_comparisons, r.ef_used, r.build_seconds, r.index_bytes
        )
        .expect("string write");
    }
    s
}

/// JSON has no NaN; serde_json writes it as `null`.
fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
