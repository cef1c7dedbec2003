//! PPO from scratch: rollout collection, GAE, clipped-surrogate updates and
//! the episode-driven training loop.

mod buffer;
mod config;
mod loss;
mod train;

pub use buffer::{compute_gae, RolloutBuffer, Transition};
pub use config::PpoConfig;
pub use loss::{PpoLoss, PpoTerms};
pub use train::{
    train, AgentConfig, AgentKind, EnvSpec, EpisodeCursor, EpisodeRecord, PpoAgent, TrainEnv,
    TrainingLog, UpdateStats,
};
