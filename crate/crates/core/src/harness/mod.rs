//! Experiment harness: scenario configuration and generation, sweep
//! execution, result emission (CSV and SVG), and Monte-Carlo validation of
//! the closed-form success probability.

mod report;
mod scenario;
mod sweep;
mod validate;

pub use report::{csv_rows, emit_csv, emit_plot, parse_csv, CsvRow};
pub use scenario::{
    generate_users, load_scenario, resolve_accuracy_model, AccuracySource, DeadlineSpec,
    DeltaSpec, ScenarioConfig, PAPER_DATA_BITS,
};
pub use sweep::{derive_seed, run_sweep, SweepParam, SweepResult, SweepRow, SweepSpec};
pub use validate::{validate_lemma1, ValidationReport, ValidationRow};
