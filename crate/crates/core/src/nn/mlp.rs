use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;
use crate::{Error, Result};

/// Hidden layer widths for both the policy and the value network.
pub const HIDDEN_SIZES: [usize; 2] = [64, 64];

/// Fully connected layer computing `x W^T + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape (out, in).
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn orthogonal(inputs: usize, outputs: usize, gain: f64, rng: &mut Rng) -> Self {
        Self {
            weight: orthogonal(outputs, inputs, gain, rng),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Stack of dense layers with Tanh between them and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.weight.t()) + &layer.bias;
            if l < last {
                a.mapv_inplace(f64::tanh);
            }
        }
        a
    }

    pub fn forward_one(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = layer.weight.dot(&a) + &layer.bias;
            if l < last {
                a.mapv_inplace(f64::tanh);
            }
        }
        a
    }

    /// Forward pass keeping every layer's input for the backward pass.
    /// `acts[0]` is the network input, `acts[l + 1]` the output of layer `l`.
    fn forward_trace(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.weight.t()) + &layer.bias;
            if l < last {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        acts
    }

    fn backward(&self, acts: &[Array2<f64>], d_out: Array2<f64>, grads: &mut Mlp) {
        let mut delta = d_out;
        for l in (0..self.layers.len()).rev() {
            let a_prev = &acts[l];
            grads.layers[l].weight += &delta.t().dot(a_prev);
            grads.layers[l].bias += &delta.sum_axis(Axis(0));
            if l > 0 {
                let mut d_prev = delta.dot(&self.layers[l].weight);
                d_prev.zip_mut_with(a_prev, |d, a| *d *= 1.0 - a * a);
                delta = d_prev;
            }
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|d| Dense::zeros(d.inputs(), d.outputs()))
                .collect(),
        }
    }
}

/// Separate policy and value networks.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub policy: Mlp,
    pub value: Mlp,
}

impl MlpParams {
    /// Orthogonal hidden layers (gain sqrt 2), zero biases, an all-zero policy
    /// head and a gain-1 value head.
    pub fn init(obs_dim: usize, action_count: usize, hidden: &[usize], rng: &mut Rng) -> Self {
        let build = |outputs: usize, head: Option<f64>, rng: &mut Rng| {
            let mut layers = Vec::with_capacity(hidden.len() + 1);
            let mut inputs = obs_dim;
            for &h in hidden {
                layers.push(Dense::orthogonal(inputs, h, 2f64.sqrt(), rng));
                inputs = h;
            }
            layers.push(match head {
                Some(gain) => Dense::orthogonal(inputs, outputs, gain, rng),
                None => Dense::zeros(inputs, outputs),
            });
            Mlp { layers }
        };
        let policy = build(action_count, None, rng);
        let value = build(1, Some(1.0), rng);
        Self { policy, value }
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn action_count(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            policy: self.policy.zeros_like(),
            value: self.value.zeros_like(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        let shapes = |p: &Self| -> Vec<Vec<usize>> {
            p.tensor_shapes().into_iter().map(|(_, s)| s).collect()
        };
        shapes(self) == shapes(other)
    }

    /// (name, shape) for every tensor, in a fixed order.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (net, mlp) in [("policy", &self.policy), ("value", &self.value)] {
            for (i, d) in mlp.layers.iter().enumerate() {
                out.push((format!("{net}.{i}.weight"), d.weight.shape().to_vec()));
                out.push((format!("{net}.{i}.bias"), d.bias.shape().to_vec()));
            }
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for mlp in [&self.policy, &self.value] {
            for d in &mlp.layers {
                out.push(d.weight.as_slice().expect("standard layout"));
                out.push(d.bias.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for mlp in [&mut self.policy, &mut self.value] {
            for d in &mut mlp.layers {
                out.push(d.weight.as_slice_mut().expect("standard layout"));
                out.push(d.bias.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Forward a batch of observations, returning (logits, values).
    pub fn forward_batch(&self, obs: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
        let logits = self.policy.forward(obs);
        let values = self.value.forward(obs).column(0).to_owned();
        (logits, values)
    }
}

pub fn mlp_init(obs_dim: usize, action_count: usize, rng: &mut Rng) -> MlpParams {
    MlpParams::init(obs_dim, action_count, &HIDDEN_SIZES, rng)
}

/// Policy logits and state value for one observation.
pub fn mlp_forward(params: &MlpParams, obs: &[f64]) -> Result<(Vec<f64>, f64)> {
    if obs.len() != params.obs_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.obs_dim(),
            got: obs.len(),
        });
    }
    let x = ArrayView1::from(obs);
    let logits = params.policy.forward_one(x).to_vec();
    let value = params.value.forward_one(x)[0];
    Ok((logits, value))
}

/// Partial derivatives of a scalar loss, shaped like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub MlpParams);

impl Gradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self(params.zeros_like())
    }

    pub fn params(&self) -> &MlpParams {
        &self.0
    }

    pub fn global_norm(&self) -> f64 {
        self.0
            .tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescale so the global L2 norm is at most `max_norm`; returns the
    /// norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm {
            let scale = max_norm / (norm + 1e-12);
            for t in self.0.tensors_mut() {
                t.iter_mut().for_each(|g| *g *= scale);
            }
        }
        norm
    }
}

/// A scalar loss defined on a batch of network outputs.
pub trait BatchLoss {
    /// Returns the loss and its partials with respect to the policy logits
    /// (shape n x actions) and the value outputs (length n).
    fn evaluate(
        &self,
        logits: ArrayView2<f64>,
        values: ArrayView1<f64>,
    ) -> (f64, Array2<f64>, Array1<f64>);
}

/// Loss value and exact analytic gradients for a batch of observations.
pub fn loss_gradients<L: BatchLoss + ?Sized>(
    params: &MlpParams,
    obs: ArrayView2<f64>,
    loss: &L,
) -> Result<(f64, Gradients)> {
    if obs.nrows() == 0 {
        return Err(Error::InvalidConfig("empty minibatch".into()));
    }
    if obs.ncols() != params.obs_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.obs_dim(),
            got: obs.ncols(),
        });
    }
    let policy_acts = params.policy.forward_trace(obs);
    let value_acts = params.value.forward_trace(obs);
    let logits = policy_acts.last().expect("non-empty network");
    let values = value_acts.last().expect("non-empty network").column(0);

    let (value, d_logits, d_values) = loss.evaluate(logits.view(), values);
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss {
            loss: value,
            context: format!("batch of {} samples", obs.nrows()),
        });
    }

    let mut grads = Gradients::zeros_like(params);
    params.policy.backward(&policy_acts, d_logits, &mut grads.0.policy);
    let d_values = d_values.insert_axis(Axis(1));
    params.value.backward(&value_acts, d_values, &mut grads.0.value);
    Ok((value, grads))
}

/// `rows x cols` matrix with orthonormal rows (or columns, whichever is
/// shorter), scaled by `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut Rng) -> Array2<f64> {
    let (k, d) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        // modified Gram-Schmidt, applied twice for stability
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    let mut out = Array2::zeros((rows, cols));
    for (i, b) in basis.iter().enumerate() {
        for (j, &x) in b.iter().enumerate() {
            if rows <= cols {
                out[[i, j]] = gain * x;
            } else {
                out[[j, i]] = gain * x;
            }
        }
    }
    out
}
