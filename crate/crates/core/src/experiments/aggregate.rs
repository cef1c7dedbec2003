use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::csv_error;
use super::RunRecord;
use crate::{Error, Result};

/// Cross-run statistics for one (agent, episode). The `agent_*` columns
/// repeat per-agent totals on every row of that agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub agent: String,
    pub episode: u64,
    pub runs: u64,
    pub mean_reward: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_reward: f64,
    pub agent_mean_reward: f64,
    pub agent_time_per_step_ns: f64,
}

/// Summarize labelled run-record sets. Every run of every input must cover
/// the same contiguous episode range.
pub fn aggregate(inputs: &[(String, Vec<RunRecord>)]) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    let mut expected_episodes: Option<u64> = None;
    for (label, records) in inputs {
        let mut runs: BTreeMap<u64, Vec<&RunRecord>> = BTreeMap::new();
        for r in records {
            runs.entry(r.run_id).or_default().push(r);
        }
        if runs.is_empty() {
            return Err(Error::InvalidConfig(format!("input '{label}' has no records")));
        }
        for (run_id, recs) in runs.iter_mut() {
            recs.sort_by_key(|r| r.episode);
            let contiguous = recs.iter().enumerate().all(|(i, r)| r.episode == i as u64);
            if !contiguous {
                return Err(Error::InvalidConfig(format!(
                    "input '{label}' run {run_id}: episodes are not contiguous from 0"
                )));
            }
            let n = recs.len() as u64;
            match expected_episodes {
                None => expected_episodes = Some(n),
                Some(e) if e != n => {
                    return Err(Error::InvalidConfig(format!(
                        "episode count mismatch: '{label}' run {run_id} has {n}, expected {e}"
                    )))
                }
                _ => {}
            }
        }

        let episodes = expected_episodes.unwrap_or(0) as usize;
        let n_runs = runs.len();
        let total_time: f64 = runs
            .values()
            .map(|recs| recs.last().map_or(0, |r| r.cumulative_wall_time_ns) as f64)
            .sum();
        let total_steps: f64 = records.iter().map(|r| r.episode_steps as f64).sum();
        let agent_mean =
            records.iter().map(|r| r.accumulated_reward).sum::<f64>() / records.len() as f64;
        let time_per_step = if total_steps > 0.0 { total_time / total_steps } else { 0.0 };

        for ep in 0..episodes {
            let xs: Vec<f64> = runs.values().map(|recs| recs[ep].accumulated_reward).collect();
            let (mean, std) = mean_std(&xs);
            rows.push(SummaryRow {
                agent: label.clone(),
                episode: ep as u64,
                runs: n_runs as u64,
                mean_reward: mean,
                std_reward: std,
                agent_mean_reward: agent_mean,
                agent_time_per_step_ns: time_per_step,
            });
        }
    }
    Ok(rows)
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| csv_error("<summary>", e))?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()
        .map_err(|e| csv_error(path, e))
}
