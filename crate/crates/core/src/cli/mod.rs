//! Experiment runner behind the `phasecap` binary.

pub mod config;
pub mod plot;
pub mod sweep;

pub use config::{ExperimentConfig, MatrixSource};
pub use plot::emit_plot_script;
pub use sweep::{read_csv, run_sweep, task_seed, CsvRow, SweepOutcome, CSV_HEADER};
