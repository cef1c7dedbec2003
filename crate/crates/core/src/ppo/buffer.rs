use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
    /// log pi_old(a|s) under the distribution actually sampled from.
    pub log_prob: f64,
    /// V_old(s).
    pub value: f64,
    /// Utility-agent logits at collection time; empty for unguided agents.
    pub dt_logits: Vec<f64>,
    /// Fusion weight snapshot used for `log_prob`.
    pub guidance_weight: f64,
}

/// Fixed-capacity on-policy store consumed by one update.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    capacity: usize,
    transitions: Vec<Transition>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            transitions: Vec::with_capacity(capacity),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn push(&mut self, t: Transition) {
        assert!(!self.is_full(), "rollout buffer overflow");
        self.transitions.push(t);
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.transitions.len() == self.capacity
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn advantages(&self) -> &[f64] {
        &self.advantages
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn has_advantages(&self) -> bool {
        self.advantages.len() == self.transitions.len() && !self.transitions.is_empty()
    }

    /// Run GAE over the stored transitions. `bootstrap_value` is V(s_next)
    /// after the last transition (ignored when that transition ended an
    /// episode).
    pub fn compute_advantages(&mut self, bootstrap_value: f64, gamma: f64, lambda: f64) -> Result<()> {
        let rewards: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, bootstrap_value, gamma, lambda)?;
        if adv.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFiniteLoss {
                loss: f64::NAN,
                context: "advantage estimation".into(),
            });
        }
        self.advantages = adv;
        self.returns = ret;
        Ok(())
    }
}

/// Generalized advantage estimation, right to left:
/// `delta_t = r_t + gamma (1 - done_t) V_{t+1} - V_t`,
/// `A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}`, `R_t = A_t + V_t`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len().min(dones.len()),
        });
    }
    let mut advantages = vec![0.0; n];
    let mut next_value = bootstrap_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * live * next_value - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}
