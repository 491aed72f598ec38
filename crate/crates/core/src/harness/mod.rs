//! Workload generation, vector file IO, knob tuning and the benchmark
//! runner.

pub mod bench;
pub mod methods;
pub mod tune;
pub mod vecs;
pub mod workload;

pub use bench::{
    format_report, gen_workload, load_dataset_dir, read_csv, read_jsonl, run_benchmark, run_benchmark_on, write_csv,
    write_jsonl, write_results, BenchConfig, BenchReport, BenchRow, Workload, BENCH_COLUMNS, BENCH_SCHEMA_VERSION,
};
pub use methods::{BuiltIndex, FilterKind, Method, MethodConfig};
pub use tune::{measure, tune_ef_for_recall, tune_knob, Measurement, Tuned, DEFAULT_EF_CAP, MONOTONE_TOLERANCE};
pub use vecs::{decode_vecs, encode_vecs, read_vecs, read_vectors, write_vecs, write_vectors, Matrix, VecsElement, VecsKind};
pub use workload::{
    gen_attributes, gen_dataset, gen_label_queries, gen_range_queries, gen_vectors, label_for_selectivity,
    read_attributes, read_queries, write_attributes, write_queries, LabelScheme, VectorDistribution, WorkloadSpec,
};
