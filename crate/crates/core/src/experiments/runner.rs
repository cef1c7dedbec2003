use std::fs::File;
use std::io::BufWriter;

use rayon::prelude::*;

use super::{write_run_records, ExperimentConfig, RunRecord};
use crate::ppo::{train, TrainingLog};
use crate::rng::child_seed;
use crate::{Error, Result};

/// Train run `run_id` of an experiment.
pub fn run_single(config: &ExperimentConfig, run_id: u64) -> Result<TrainingLog> {
    train(
        config.agent,
        config.env,
        config.episodes,
        child_seed(config.master_seed, run_id),
        &config.agent_config,
    )
}

/// Execute every run (in parallel), write the sorted records to
/// `output_path` and return them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    // fail before training if the destination is unwritable
    let file = File::create(&config.output_path).map_err(|e| Error::io(&config.output_path, e))?;

    let logs: Vec<(u64, TrainingLog)> = (0..config.runs as u64)
        .into_par_iter()
        .map(|i| run_single(config, i).map(|log| (i, log)))
        .collect::<Result<_>>()?;

    let mut records: Vec<RunRecord> = logs
        .iter()
        .flat_map(|(i, log)| RunRecord::from_log(*i, log))
        .collect();
    records.sort_by_key(|r| (r.run_id, r.episode));
    write_run_records(BufWriter::new(file), &records)?;
    Ok(records)
}
