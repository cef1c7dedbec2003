//! Seedable environments with a uniform reset/step interface.

mod cartpole;
mod maze;

pub use cartpole::{CartPole, CartPoleAction, CartPoleParams, CartPoleState};
pub use maze::{Maze, MazeAction, MazeGrid, MazePosition, Walls};

use crate::Result;

/// Outcome of a single environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Steps taken in the current episode, including this one.
    pub steps_taken: usize,
}

/// Common episodic interface.
///
/// Implementors own their RNG stream; `reset` draws from it.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Start a new episode and return its first observation.
    fn reset(&mut self) -> Vec<f64>;
    /// Advance one step. Stepping a finished episode is an error.
    fn step(&mut self, action: usize) -> Result<StepResult>;
    fn observe(&self) -> Vec<f64>;
    /// Hard upper bound on episode length.
    fn max_episode_steps(&self) -> usize;
}
