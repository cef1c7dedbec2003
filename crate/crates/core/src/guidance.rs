//! Logit fusion between a decision-theory prior and a policy network.
//!
//! The network's logits are summed with `w` times the reverse-softmax
//! logits of the utility agent, and a temperature-1 softmax produces the
//! acting distribution. `w` starts at 1 and decays linearly per environment
//! step. With a zero-initialized policy head the fused distribution starts
//! out identical to the utility agent's.

use std::str::FromStr;

use crate::dt::{log_softmax, reverse_softmax, ActionDistribution};
use crate::nn::{mlp_forward, MlpParams};
use crate::{Error, Result};

/// Which fusion weight the update pass applies to stored utility logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateWeight {
    /// The weight recorded with each transition at collection time, so the
    /// probability ratio is unaffected by the schedule moving on.
    #[default]
    Snapshot,
    /// The weight in force when the update runs.
    Current,
}

impl FromStr for UpdateWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snapshot" => Ok(Self::Snapshot),
            "current" => Ok(Self::Current),
            _ => Err(Error::InvalidConfig(format!(
                "update_weight must be 'snapshot' or 'current', got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceConfig {
    pub dt_temperature: f64,
    pub initial_weight: f64,
    pub final_weight: f64,
    pub decay_steps: u64,
    pub update_weight: UpdateWeight,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            dt_temperature: 0.1,
            initial_weight: 1.0,
            final_weight: 0.0,
            decay_steps: 20_480,
            update_weight: UpdateWeight::Snapshot,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_weight >= self.final_weight && self.final_weight >= 0.0) {
            return Err(Error::InvalidConfig(
                "guidance weights must satisfy initial >= final >= 0".into(),
            ));
        }
        if self.decay_steps == 0 {
            return Err(Error::InvalidConfig("decay_steps must be >= 1".into()));
        }
        if !(self.dt_temperature > 0.0) {
            return Err(Error::InvalidConfig("dt temperature must be > 0".into()));
        }
        Ok(())
    }
}

/// Linear decay from `initial_weight` to `final_weight` over `decay_steps`.
pub fn weight_schedule(step: u64, config: &GuidanceConfig) -> f64 {
    let progress = step as f64 / config.decay_steps as f64;
    (config.initial_weight - (config.initial_weight - config.final_weight) * progress)
        .max(config.final_weight)
}

/// Per-run environment step counter and the weight it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceState {
    config: GuidanceConfig,
    env_step_counter: u64,
    current_weight: f64,
}

impl GuidanceState {
    pub fn new(config: GuidanceConfig) -> Self {
        let current_weight = weight_schedule(0, &config);
        Self {
            config,
            env_step_counter: 0,
            current_weight,
        }
    }

    pub fn config(&self) -> &GuidanceConfig {
        &self.config
    }

    pub fn env_steps(&self) -> u64 {
        self.env_step_counter
    }

    pub fn weight(&self) -> f64 {
        self.current_weight
    }

    /// Count one environment step.
    pub fn advance(&mut self) {
        self.env_step_counter += 1;
        self.current_weight = weight_schedule(self.env_step_counter, &self.config);
    }
}

/// `nn_logits + w * dt_logits`.
pub fn fuse_logits(nn_logits: &[f64], dt_logits: &[f64], w: f64) -> Result<Vec<f64>> {
    if nn_logits.len() != dt_logits.len() {
        return Err(Error::DimensionMismatch {
            expected: nn_logits.len(),
            got: dt_logits.len(),
        });
    }
    Ok(nn_logits
        .iter()
        .zip(dt_logits)
        .map(|(n, d)| n + w * d)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidedOutput {
    pub distribution: ActionDistribution,
    pub log_probs: Vec<f64>,
    pub value: f64,
    /// Reverse-softmax logits of the utility agent, kept for the update pass.
    pub dt_logits: Vec<f64>,
}

/// Fused action distribution for one observation. `dt_probs` must come
/// from the same underlying environment state as `obs`. Does not advance
/// the guidance step counter.
pub fn guided_action_distribution(
    params: &MlpParams,
    obs: &[f64],
    dt_probs: &ActionDistribution,
    state: &GuidanceState,
) -> Result<GuidedOutput> {
    let (nn_logits, value) = mlp_forward(params, obs)?;
    let dt_logits = reverse_softmax(dt_probs);
    let fused = fuse_logits(&nn_logits, &dt_logits, state.weight())?;
    let log_probs = log_softmax(&fused);
    let distribution = ActionDistribution::from_logits(&fused);
    Ok(GuidedOutput {
        distribution,
        log_probs,
        value,
        dt_logits,
    })
}
