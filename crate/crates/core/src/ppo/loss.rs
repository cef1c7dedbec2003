use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::dt::log_softmax;
use crate::nn::BatchLoss;

/// Clipped-surrogate PPO loss over one minibatch.
///
/// `logit_bias` is added to the network logits before the final softmax;
/// for guided agents it holds `w * dt_logits` per sample and is treated as
/// a constant input, so no gradient reaches the utility branch.
#[derive(Debug, Clone)]
pub struct PpoLoss {
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    /// Already normalized.
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// Shape (n, actions).
    pub logit_bias: Array2<f64>,
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Loss components and their gradients with respect to the network outputs.
#[derive(Debug, Clone)]
pub struct PpoTerms {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub d_logits: Array2<f64>,
    pub d_values: Array1<f64>,
}

impl PpoLoss {
    pub fn terms(&self, logits: ArrayView2<f64>, values: ArrayView1<f64>) -> PpoTerms {
        let n = self.actions.len();
        let inv_n = 1.0 / n as f64;
        let (lo, hi) = (1.0 - self.clip_epsilon, 1.0 + self.clip_epsilon);
        let mut d_logits = Array2::zeros(logits.raw_dim());
        let mut d_values = Array1::zeros(n);
        let (mut policy_loss, mut value_loss, mut entropy) = (0.0, 0.0, 0.0);
        let (mut approx_kl, mut clipped) = (0.0, 0usize);

        for i in 0..n {
            let fused: Vec<f64> = logits
                .row(i)
                .iter()
                .zip(self.logit_bias.row(i))
                .map(|(z, b)| z + b)
                .collect();
            let log_p = log_softmax(&fused);
            let probs: Vec<f64> = log_p.iter().map(|l| l.exp()).collect();
            let a = self.actions[i];
            let adv = self.advantages[i];

            let log_ratio = log_p[a] - self.old_log_probs[i];
            let ratio = log_ratio.exp();
            let surr = ratio * adv;
            let surr_clipped = ratio.clamp(lo, hi) * adv;
            policy_loss -= surr.min(surr_clipped) * inv_n;
            if !(lo..=hi).contains(&ratio) {
                clipped += 1;
            }
            approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;

            // d(-min)/d log_p[a]; zero when the clipped branch is the minimum
            let d_logp = if surr <= surr_clipped {
                -adv * ratio * inv_n
            } else {
                0.0
            };

            let h: f64 = -probs.iter().zip(&log_p).map(|(p, l)| p * l).sum::<f64>();
            entropy += h * inv_n;

            let mut row = d_logits.row_mut(i);
            for j in 0..probs.len() {
                let onehot = if j == a { 1.0 } else { 0.0 };
                let d_policy = d_logp * (onehot - probs[j]);
                // d(-c H)/dz_j = c p_j (log p_j + H)
                let d_entropy = self.entropy_coef * inv_n * probs[j] * (log_p[j] + h);
                row[j] = d_policy + d_entropy;
            }

            let err = values[i] - self.returns[i];
            value_loss += err * err * inv_n;
            d_values[i] = self.value_coef * 2.0 * err * inv_n;
        }

        PpoTerms {
            total: policy_loss + self.value_coef * value_loss - self.entropy_coef * entropy,
            policy_loss,
            value_loss,
            entropy,
            approx_kl,
            clip_fraction: clipped as f64 * inv_n,
            d_logits,
            d_values,
        }
    }
}

impl BatchLoss for PpoLoss {
    fn evaluate(
        &self,
        logits: ArrayView2<f64>,
        values: ArrayView1<f64>,
    ) -> (f64, Array2<f64>, Array1<f64>) {
        let t = self.terms(logits, values);
        (t.total, t.d_logits, t.d_values)
    }
}
