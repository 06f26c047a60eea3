//! Data ingestion, synthetic instances, experiment plans and their outputs.

mod experiment;
mod libsvm;
mod plan;
mod svg;
mod synthetic;
mod trace;

pub use experiment::{
    load_source, problem_at_ratio, run_experiment, summarize, trace_file_name, ExperimentReport,
    RunOutcome, RunRecord, SummaryRow,
};
pub use libsvm::{binarize_labels, load_libsvm, parse_libsvm};
pub use plan::{DataSource, ExperimentPlan};
pub use svg::{render_chart, Series};
pub use synthetic::{generate_orthonormal, generate_synthetic, Synthetic, SyntheticParams};
pub use trace::{read_trace, read_trace_file, write_trace, write_trace_file};
