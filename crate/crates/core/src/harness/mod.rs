//! Experiment driver: inputs, parallel cells, aggregation, sweeps and reports.

mod config;
pub mod desk;
mod pipeline;
mod prefix;
mod report;
mod seed;
mod sweep;

pub use config::{strategy_names, ExperimentConfig, ModelConfig};
pub use pipeline::{
    aggregate, check_record, check_records, generate_record, generate_records, human_fourgrams,
    reference_summary, reference_tokens, run_experiment, run_strategies, strategy_rows,
    train_from_file, train_from_text, CellSummary, Checked, Diagnostic, ExperimentResult, Prepared,
    RowInputs, SentenceRow, VerdictRow, HUMAN,
};
pub use prefix::{load_prefixes, validate_prefixes, PrefixEntry};
pub use report::{
    read_report, render_table, write_correlations, write_report, CorrelationRow, ReportRow, COLUMNS,
};
pub use seed::{stream_rng, stream_seed, RNG_STREAM};
pub use sweep::{parse_grid, sweep, sweep_prepared, Objective, SweepResult, SweepRow};
