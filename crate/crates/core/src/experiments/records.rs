use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ppo::TrainingLog;
use crate::{Error, Result};

pub const RUN_HEADER: &str = "run_id,episode,accumulated_reward,episode_steps,cumulative_wall_time_ns";

/// One row per (run, episode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub episode: u64,
    pub accumulated_reward: f64,
    pub episode_steps: u64,
    pub cumulative_wall_time_ns: u64,
}

impl RunRecord {
    pub fn from_log(run_id: u64, log: &TrainingLog) -> Vec<Self> {
        log.episodes
            .iter()
            .enumerate()
            .map(|(i, e)| RunRecord {
                run_id,
                episode: i as u64,
                accumulated_reward: e.accumulated_reward,
                episode_steps: e.steps as u64,
                cumulative_wall_time_ns: e.cumulative_wall_time_ns,
            })
            .collect()
    }
}

pub fn write_run_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| csv_error("<output>", e))?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn read_run_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().collect::<Vec<_>>().join(",") != RUN_HEADER {
        return Err(Error::Csv {
            path: path.into(),
            reason: format!("expected header '{RUN_HEADER}'"),
        });
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<RunRecord>, _>>()
        .map_err(|e| csv_error(path, e))
}

pub(crate) fn csv_error(path: impl AsRef<Path>, e: csv::Error) -> Error {
    Error::Csv {
        path: path.as_ref().into(),
        reason: e.to_string(),
    }
}
