use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub rollout_size: usize,
    pub minibatch_size: usize,
    pub clip_epsilon: f64,
    pub gae_lambda: f64,
    pub update_epochs: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 3e-4,
            rollout_size: 2048,
            minibatch_size: 64,
            clip_epsilon: 0.2,
            gae_lambda: 0.95,
            update_epochs: 10,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("gamma must lie in (0, 1]");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return fail("clip epsilon must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return fail("gae lambda must lie in [0, 1]");
        }
        if self.minibatch_size == 0 || self.rollout_size == 0 {
            return fail("rollout and minibatch sizes must be positive");
        }
        if self.rollout_size % self.minibatch_size != 0 {
            return fail("rollout size must be divisible by minibatch size");
        }
        if self.update_epochs == 0 {
            return fail("update epochs must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) {
            return fail("learning rate and max grad norm must be positive");
        }
        Ok(())
    }

    pub fn minibatches_per_epoch(&self) -> usize {
        self.rollout_size / self.minibatch_size
    }
}
