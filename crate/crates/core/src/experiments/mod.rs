//! Seeded multi-run experiments, CSV records, aggregation and the CLI.

mod aggregate;
pub mod cli;
mod config;
mod records;
mod runner;
mod tl;

pub use aggregate::{aggregate, read_summary, write_summary, SummaryRow};
pub use config::{ExperimentConfig, Settings};
pub use records::{read_run_records, write_run_records, RunRecord, RUN_HEADER};
pub use runner::{run_experiment, run_single};
pub use tl::{tl_pretrain_then_transfer, TlOutcome, PRETRAIN_EPISODES, PRETRAIN_MAZE_SIZE};
