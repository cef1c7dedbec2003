use std::path::Path;

use crate::envs::Maze;
use crate::nn::{MlpParams, Snapshot};
use crate::ppo::{AgentConfig, EnvSpec, PpoAgent, TrainingLog};
use crate::rng::{stream, Stream};
use crate::{Error, Result};

pub const PRETRAIN_MAZE_SIZE: usize = 3;
pub const PRETRAIN_EPISODES: usize = 100;

#[derive(Debug, Clone)]
pub struct TlOutcome {
    pub pretrain_log: TrainingLog,
    pub snapshot: Snapshot,
    /// Parameters the target stage started from.
    pub transferred: MlpParams,
    pub target_log: TrainingLog,
    pub agent: PpoAgent,
}

/// Plain PPO pretrained for 100 episodes on a 3x3 maze, then trained on the
/// target maze starting from the snapshot. Observations are normalized
/// positions on both mazes, so parameters carry over unchanged. The
/// optimizer state restarts at the handoff.
pub fn tl_pretrain_then_transfer(
    target_size: usize,
    episodes: usize,
    seed: u64,
    config: &AgentConfig,
    snapshot_path: Option<&Path>,
) -> Result<TlOutcome> {
    if target_size <= PRETRAIN_MAZE_SIZE {
        return Err(Error::InvalidConfig(format!(
            "target maze {target_size} must be larger than {PRETRAIN_MAZE_SIZE}"
        )));
    }
    let small = EnvSpec::Maze {
        size: PRETRAIN_MAZE_SIZE,
    };
    let mut pre_env = Maze::generate(PRETRAIN_MAZE_SIZE, &mut stream(seed, Stream::PretrainMaze))?;
    let mut pre_agent = PpoAgent::new(small, config, false, seed)?;
    let pretrain_log = pre_agent.train_episodes(&mut pre_env, PRETRAIN_EPISODES)?;

    let snapshot = Snapshot::from_params(&pre_agent.params);
    let snapshot = match snapshot_path {
        Some(path) => {
            snapshot.save(path)?;
            Snapshot::load(path)?
        }
        None => snapshot,
    };
    let transferred = snapshot.to_params()?;

    let target = EnvSpec::Maze { size: target_size };
    let mut env = target.build(seed)?;
    let mut agent = PpoAgent::with_params(transferred.clone(), config, false, seed)?;
    let target_log = agent.train_episodes(env.as_mut(), episodes)?;
    Ok(TlOutcome {
        pretrain_log,
        snapshot,
        transferred,
        target_log,
        agent,
    })
}
