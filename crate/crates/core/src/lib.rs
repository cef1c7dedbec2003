//! Decision-theory guided PPO.
//!
//! A small reinforcement-learning laboratory: hand-designed utility agents
//! for cart pole and grid mazes, a PPO learner written from scratch on top of
//! a dense Tanh MLP, and the logit fusion that lets the utility agent steer
//! the learner early in training while a linearly decaying weight hands
//! control over to the network.
//!
//! Module map:
//! - [`envs`]: cart pole and perfect-maze environments.
//! - [`dt`]: utility functions, tempered softmax, reverse softmax, sampling.
//! - [`nn`]: MLP parameters, reverse-mode gradients, Adam, snapshots.
//! - [`guidance`]: weight schedule and logit fusion.
//! - [`ppo`]: rollout buffer, GAE, clipped-surrogate update, training driver.
//! - [`experiments`]: seeded multi-run runner, CSV records, aggregation, CLI.

pub mod dt;
pub mod envs;
pub mod error;
pub mod experiments;
pub mod guidance;
pub mod nn;
pub mod ppo;
pub mod rng;

pub use error::{Error, Result};
