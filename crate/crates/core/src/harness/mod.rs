//! Dataset ingestion, experiment configuration, the run loop and trace
//! output.

mod config;
mod data;
mod run;

pub use config::{CostIterate, DataSource, ExperimentConfig, Mode, Overrides, ProblemKind};
pub use data::{
    parse_libsvm, parse_libsvm_str, partition, synthetic_classification, synthetic_regression, Dataset, Sample,
};
pub use run::{
    build_graph, build_problem, load_dataset, read_trace, run_experiment, write_trace, Experiment, TraceRecord,
    TRACE_HEADER,
};
