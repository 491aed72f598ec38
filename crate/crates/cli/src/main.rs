use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fann::eval::{ground_truth, load_truth, save_truth, GroundTruth, TruthKey};
use fann::harness::{
    format_report, gen_label_queries, gen_range_queries, measure, read_csv, read_jsonl, read_queries, run_benchmark,
    write_attributes, write_queries, write_results, write_vectors, BenchConfig, BenchRow, BuiltIndex, FilterKind, Method,
};
use fann::persist;
use fann::AttributedDataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Filtered approximate nearest neighbor indexes: data generation, builds,
/// searches and benchmarks.
#[derive(Parser)]
#[command(name = "fann", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML benchmark configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset directory holding `base.fvecs` and `attrs.txt`.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated selectivities in (0, 1].
    #[arg(long, global = true, value_delimiter = ',')]
    selectivity: Vec<f64>,
    /// Predicate kind: `range` or `label`.
    #[arg(long, global = true)]
    filter: Option<FilterKind>,
    /// Pruning rule: rng, two-hop, label-covered or keep-nearest.
    #[arg(long, global = true)]
    prune: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Generate queries as JSON lines, one block per selectivity.
    GenQueries {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Exact filtered top-k for a query file, written as a truth cache.
    GroundTruth {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one method's index and store it.
    Build {
        #[arg(long)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a query file against a built (or stored) index at a fixed knob.
    Search {
        #[arg(long)]
        method: Method,
        /// Stored index; built in memory when absent.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        queries: PathBuf,
        /// Truth cache from `ground-truth`; computed when absent.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        ef: usize,
        #[arg(long)]
        ep_count: Option<usize>,
        /// CSV or JSONL result path; the other format is written alongside.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune every configured method at every selectivity.
    Bench {
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        method: Vec<String>,
        #[arg(long)]
        ef_cap: Option<usize>,
        /// Entry-point counts swept on the segmented-edge method.
        #[arg(long, value_delimiter = ',')]
        ep_count: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a results file as a table.
    Report { input: PathBuf },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut config = match &cli.common.config {
        Some(p) => BenchConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => BenchConfig::default(),
    };
    apply_common(&mut config, &cli.common);
    match cli.command {
        Command::GenData { out, n, d } => {
            if let Some(n) = n {
                config.workload.n = n;
            }
            if let Some(d) = d {
                config.workload.d = d;
            }
            config.workload.validate()?;
            let ds = fann::harness::gen_dataset(&config.workload)?;
            std::fs::create_dir_all(&out)?;
            write_vectors(&out.join("base.fvecs"), ds.vectors())?;
            write_attributes(&out.join("attrs.txt"), &ds)?;
            log::info!("wrote {} points of dimension {} to {}", ds.len(), ds.dim(), out.display());
        }
        Command::GenQueries { out, count, k } => {
            if let Some(c) = count {
                config.workload.query_count = c;
            }
            if let Some(k) = k {
                config.workload.k = k;
            }
            let ds = config.load_dataset()?;
            let spec = &config.workload;
            let mut all = Vec::new();
            for (level, &s) in spec.selectivity_levels.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.query_seed(level));
                let qs = match config.filter {
                    FilterKind::Range => gen_range_queries(&ds, s, spec.query_count, spec.vector_distribution, spec.k, &mut rng)?,
                    FilterKind::Label => gen_label_queries(&ds, s, spec.query_count, spec.vector_distribution, spec.k, &mut rng)?,
                };
                all.extend(qs);
            }
            write_queries(&out, &all)?;
            log::info!("wrote {} queries to {}", all.len(), out.display());
        }
        Command::GroundTruth { queries, out } => {
            let ds = config.load_dataset()?;
            let qs = read_queries(&queries)?;
            let k = query_k(&qs, config.workload.k);
            let truth = ground_truth(&ds, &qs, k)?;
            save_truth(&out, &TruthKey::new(&ds, &qs, k), &truth)?;
            log::info!("wrote exact top-{k} of {} queries to {}", qs.len(), out.display());
        }
        Command::Build { method, out } => {
            let ds = config.load_dataset()?;
            let cfg = config.method_config(method)?;
            let start = Instant::now();
            let index = BuiltIndex::build(method, &ds, &cfg)?;
            let secs = start.elapsed().as_secs_f64();
            let Some(stored) = index.to_stored(&cfg) else {
                bail!("{method} has no stored form; it is rebuilt on demand");
            };
            persist::save(&out, &stored, ds.dim())?;
            log::info!("{method}: built in {secs:.2}s, {} bytes, saved to {}", index.memory_bytes(), out.display());
        }
        Command::Search {
            method,
            index,
            queries,
            truth,
            ef,
            ep_count,
            out,
        } => {
            let ds = config.load_dataset()?;
            let cfg = config.method_config(method)?;
            let start = Instant::now();
            let mut built = match &index {
                Some(p) => BuiltIndex::from_stored(method, persist::load(p)?.1)?,
                None => BuiltIndex::build(method, &ds, &cfg)?,
            };
            let build_seconds = start.elapsed().as_secs_f64();
            if let Some(ep) = ep_count {
                if !built.set_ep_count(ep) {
                    log::warn!("{method} has no entry-point count; --ep-count ignored");
                }
            }
            let qs = read_queries(&queries)?;
            let truth = load_or_compute_truth(&ds, &qs, config.workload.k, truth.as_deref())?;
            let m = measure(&built, &ds, &qs, &truth, ef)?;
            let row = BenchRow {
                method: method.name().to_string(),
                selectivity: mean_selectivity(&ds, &qs)?,
                recall: m.recall,
                qps: m.qps,
                mean_comparisons: m.mean_comparisons,
                ef_used: ef,
                build_seconds,
                index_bytes: built.memory_bytes() as u64,
                peak_memory_estimate: built.memory_bytes() as u64,
                failed: false,
            };
            print!("{}", format_report(std::slice::from_ref(&row)));
            if m.violations > 0 {
                log::warn!("{} returned ids fail their predicate", m.violations);
            }
            if let Some(out) = out {
                let (c, j) = write_results(&out, &[row])?;
                log::info!("wrote {} and {}", c.display(), j.display());
            }
        }
        Command::Bench { method, ef_cap, ep_count, out } => {
            if !method.is_empty() {
                config.methods = method;
            }
            if let Some(cap) = ef_cap {
                config.ef_cap = cap;
            }
            if !ep_count.is_empty() {
                config.ep_counts = ep_count;
            }
            if config.methods.is_empty() {
                bail!("no methods configured; pass --method or list them in the config");
            }
            let report = run_benchmark(&config)?;
            print!("{}", format_report(&report.rows));
            for (m, v) in report.violations.iter().filter(|(_, v)| **v > 0) {
                log::warn!("{m}: {v} returned ids fail their predicate");
            }
            for (m, s) in &report.non_monotone {
                log::warn!("{m} s={s}: recall dropped as the knob doubled");
            }
            if let Some(out) = out {
                let (c, j) = write_results(&out, &report.rows)?;
                log::info!("wrote {} and {}", c.display(), j.display());
            }
        }
        Command::Report { input } => {
            let rows = match input.extension().and_then(|e| e.to_str()) {
                Some("jsonl") => read_jsonl(&input)?,
                _ => read_csv(&input)?,
            };
            print!("{}", format_report(&rows));
        }
    }
    Ok(())
}

fn apply_common(config: &mut BenchConfig, c: &Common) {
    if let Some(d) = &c.data {
        config.dataset = Some(d.clone());
    }
    if let Some(s) = c.seed {
        config.workload.seed = s;
        config.defaults.insert("seed".into(), (s as i64).into());
    }
    if !c.selectivity.is_empty() {
        config.workload.selectivity_levels = c.selectivity.clone();
    }
    if let Some(f) = c.filter {
        config.filter = f;
    }
    if let Some(p) = &c.prune {
        config.prune = Some(p.clone());
    }
}

fn query_k(qs: &[fann::FilteredQuery], fallback: usize) -> usize {
    qs.first().map_or(fallback, |q| q.k)
}

fn load_or_compute_truth(ds: &AttributedDataset, qs: &[fann::FilteredQuery], k: usize, path: Option<&Path>) -> Result<GroundTruth> {
    let k = query_k(qs, k);
    let Some(path) = path else {
        return Ok(ground_truth(ds, qs, k)?);
    };
    match load_truth(path, &TruthKey::new(ds, qs, k))? {
        Some(t) => Ok(t),
        None => bail!("{} was computed for other data or queries", path.display()),
    }
}

fn mean_selectivity(ds: &AttributedDataset, qs: &[fann::FilteredQuery]) -> Result<f64> {
    if qs.is_empty() {
        return Ok(f64::NAN);
    }
    let mut sum = 0.0;
    for q in qs {
        sum += fann::exact_selectivity(&q.predicate, ds)?;
    }
    Ok(sum / qs.len() as f64)
}
