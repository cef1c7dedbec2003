use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;

use super::{PpoConfig, PpoLoss, RolloutBuffer, Transition};
use crate::dt::{log_softmax, ActionDistribution, DtConfig, DtUtility};
use crate::envs::{CartPole, CartPoleParams, Environment, Maze};
use crate::guidance::{guided_action_distribution, GuidanceConfig, GuidanceState, UpdateWeight};
use crate::nn::{adam_step, loss_gradients, mlp_forward, mlp_init, AdamState, MlpParams};
use crate::rng::{stream, Rng, Stream};
use crate::{Error, Result};

/// Environments usable by every agent kind.
pub trait TrainEnv: Environment + DtUtility {}

impl<T: Environment + DtUtility> TrainEnv for T {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    /// Utility agent alone, never trained.
    Dt,
    Ppo,
    /// PPO acting through the fused distribution.
    DtPpo,
    /// PPO warm-started from a 3x3 maze.
    TlPpo,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dt => "dt",
            Self::Ppo => "ppo",
            Self::DtPpo => "dtppo",
            Self::TlPpo => "tlppo",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Ok(Self::Dt),
            "ppo" => Ok(Self::Ppo),
            "dtppo" | "dt-ppo" => Ok(Self::DtPpo),
            "tlppo" | "tl-ppo" => Ok(Self::TlPpo),
            "seppo" | "se-ppo" | "ilppo" | "il-ppo" => Err(Error::NotImplemented(s.to_string())),
            _ => Err(Error::InvalidConfig(format!("unknown agent '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvSpec {
    CartPole,
    Maze { size: usize },
}

impl EnvSpec {
    /// Build the environment for a run. The maze layout depends only on the
    /// run seed, so every agent trained with that seed faces the same maze.
    pub fn build(&self, seed: u64) -> Result<Box<dyn TrainEnv>> {
        Ok(match *self {
            EnvSpec::CartPole => Box::new(CartPole::new(
                CartPoleParams::default(),
                stream(seed, Stream::Env),
            )),
            EnvSpec::Maze { size } => Box::new(Maze::generate(size, &mut stream(seed, Stream::Maze))?),
        })
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            EnvSpec::CartPole => 4,
            EnvSpec::Maze { .. } => 2,
        }
    }

    pub fn action_count(&self) -> usize {
        match self {
            EnvSpec::CartPole => 2,
            EnvSpec::Maze { .. } => 4,
        }
    }
}

/// Everything an agent needs besides its seed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentConfig {
    pub ppo: PpoConfig,
    pub dt: DtConfig,
    pub guidance: GuidanceConfig,
}

impl AgentConfig {
    pub fn validate(&self, action_count: usize) -> Result<()> {
        self.ppo.validate()?;
        self.dt.validate(action_count)?;
        self.guidance.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub accumulated_reward: f64,
    pub steps: usize,
    /// Wall time from the start of training to the end of this episode.
    pub cumulative_wall_time_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeRecord>,
    /// Includes steps collected after the last logged episode to finish the
    /// final rollout.
    pub total_env_steps: u64,
    pub total_wall_time_ns: u64,
    pub updates: usize,
}

impl TrainingLog {
    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.accumulated_reward).collect()
    }

    pub fn time_per_step_ns(&self) -> f64 {
        self.total_wall_time_ns as f64 / self.total_env_steps.max(1) as f64
    }
}

/// In-progress episode state carried across rollouts.
#[derive(Debug)]
pub struct EpisodeCursor {
    obs: Option<Vec<f64>>,
    reward: f64,
    steps: usize,
    started: Instant,
    finished: Vec<EpisodeRecord>,
    env_steps: u64,
}

impl EpisodeCursor {
    pub fn new() -> Self {
        Self {
            obs: None,
            reward: 0.0,
            steps: 0,
            started: Instant::now(),
            finished: Vec::new(),
            env_steps: 0,
        }
    }

    pub fn finished(&self) -> &[EpisodeRecord] {
        &self.finished
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    fn current_obs(&mut self, env: &mut dyn TrainEnv) -> Vec<f64> {
        self.obs.get_or_insert_with(|| env.reset()).clone()
    }

    fn record(&mut self, reward: f64, done: bool, next_obs: Vec<f64>, env: &mut dyn TrainEnv) {
        self.reward += reward;
        self.steps += 1;
        self.env_steps += 1;
        if done {
            self.finished.push(EpisodeRecord {
                accumulated_reward: self.reward,
                steps: self.steps,
                cumulative_wall_time_ns: self.elapsed_ns(),
            });
            self.reward = 0.0;
            self.steps = 0;
            self.obs = Some(env.reset());
        } else {
            self.obs = Some(next_obs);
        }
    }

    fn elapsed_ns(&self) -> u64 {
        self.started.elapsed().as_nanos() as u64
    }

    fn into_log(mut self, episodes: usize, updates: usize) -> TrainingLog {
        self.finished.truncate(episodes);
        TrainingLog {
            total_wall_time_ns: self.elapsed_ns(),
            episodes: self.finished,
            total_env_steps: self.env_steps,
            updates,
        }
    }
}

impl Default for EpisodeCursor {
    fn default() -> Self {
        Self::new()
    }
}

/// Averages over the minibatches of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub optimizer_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Decision {
    action: usize,
    log_prob: f64,
    value: f64,
    dt_logits: Vec<f64>,
    weight: f64,
}

/// Actor-critic learner, optionally guided by the utility agent.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    pub params: MlpParams,
    pub adam: AdamState,
    pub config: PpoConfig,
    guide: Option<(DtConfig, GuidanceState)>,
    action_rng: Rng,
    shuffle_rng: Rng,
}

impl PpoAgent {
    /// Fresh network from the run seed's init stream.
    pub fn new(spec: EnvSpec, config: &AgentConfig, guided: bool, seed: u64) -> Result<Self> {
        let params = mlp_init(spec.obs_dim(), spec.action_count(), &mut stream(seed, Stream::NetInit));
        Self::with_params(params, config, guided, seed)
    }

    pub fn with_params(
        params: MlpParams,
        config: &AgentConfig,
        guided: bool,
        seed: u64,
    ) -> Result<Self> {
        config.validate(params.action_count())?;
        let guide = guided.then(|| {
            let dt = DtConfig {
                temperature: config.guidance.dt_temperature,
                ..config.dt.clone()
            };
            (dt, GuidanceState::new(config.guidance.clone()))
        });
        Ok(Self {
            adam: AdamState::new(&params),
            params,
            config: config.ppo.clone(),
            guide,
            action_rng: stream(seed, Stream::Action),
            shuffle_rng: stream(seed, Stream::Shuffle),
        })
    }

    pub fn is_guided(&self) -> bool {
        self.guide.is_some()
    }

    pub fn guidance(&self) -> Option<&GuidanceState> {
        self.guide.as_ref().map(|(_, g)| g)
    }

    fn act(&mut self, env: &dyn TrainEnv, obs: &[f64]) -> Result<Decision> {
        match &self.guide {
            Some((dt_cfg, state)) => {
                let dt_probs = dt_cfg.distribution(&env.utilities(dt_cfg));
                let out = guided_action_distribution(&self.params, obs, &dt_probs, state)?;
                let action = out.distribution.sample(&mut self.action_rng);
                Ok(Decision {
                    action,
                    log_prob: out.log_probs[action],
                    value: out.value,
                    dt_logits: out.dt_logits,
                    weight: state.weight(),
                })
            }
            None => {
                let (logits, value) = mlp_forward(&self.params, obs)?;
                let log_probs = log_softmax(&logits);
                let action = ActionDistribution::from_logits(&logits).sample(&mut self.action_rng);
                Ok(Decision {
                    action,
                    log_prob: log_probs[action],
                    value,
                    dt_logits: Vec::new(),
                    weight: 0.0,
                })
            }
        }
    }

    /// Fill a rollout buffer to capacity, resetting the environment whenever
    /// an episode ends, then compute advantages.
    pub fn collect_rollout(
        &mut self,
        env: &mut dyn TrainEnv,
        cursor: &mut EpisodeCursor,
    ) -> Result<RolloutBuffer> {
        let mut buffer = RolloutBuffer::new(self.config.rollout_size);
        while !buffer.is_full() {
            let obs = cursor.current_obs(env);
            let d = self.act(env, &obs)?;
            let step = env.step(d.action)?;
            if let Some((_, state)) = &mut self.guide {
                state.advance();
            }
            buffer.push(Transition {
                observation: obs,
                action: d.action,
                reward: step.reward,
                done: step.done,
                log_prob: d.log_prob,
                value: d.value,
                dt_logits: d.dt_logits,
                guidance_weight: d.weight,
            });
            cursor.record(step.reward, step.done, step.observation, env);
        }
        let last_done = buffer.transitions().last().is_some_and(|t| t.done);
        let bootstrap = if last_done {
            0.0
        } else {
            let obs = cursor.current_obs(env);
            mlp_forward(&self.params, &obs)?.1
        };
        buffer.compute_advantages(bootstrap, self.config.gamma, self.config.gae_lambda)?;
        Ok(buffer)
    }

    /// Clipped-surrogate update over `update_epochs` shuffled passes.
    pub fn update(&mut self, buffer: &RolloutBuffer) -> Result<UpdateStats> {
        if !buffer.is_full() || !buffer.has_advantages() {
            return Err(Error::InvalidConfig(
                "update needs a full buffer with advantages".into(),
            ));
        }
        let cfg = self.config.clone();
        let transitions = buffer.transitions();
        let obs_dim = self.params.obs_dim();
        let actions = self.params.action_count();
        let mut indices: Vec<usize> = (0..transitions.len()).collect();
        let mut stats = UpdateStats::default();
        let current = self.guide.as_ref().and_then(|(_, g)| {
            (g.config().update_weight == UpdateWeight::Current).then(|| g.weight())
        });

        for _ in 0..cfg.update_epochs {
            indices.shuffle(&mut self.shuffle_rng);
            for chunk in indices.chunks(cfg.minibatch_size) {
                let obs = Array2::from_shape_fn((chunk.len(), obs_dim), |(r, c)| {
                    transitions[chunk[r]].observation[c]
                });
                let logit_bias = Array2::from_shape_fn((chunk.len(), actions), |(r, c)| {
                    let t = &transitions[chunk[r]];
                    if t.dt_logits.is_empty() {
                        0.0
                    } else {
                        current.unwrap_or(t.guidance_weight) * t.dt_logits[c]
                    }
                });
                let raw: Vec<f64> = chunk.iter().map(|&i| buffer.advantages()[i]).collect();
                let loss = TrackedLoss {
                    inner: PpoLoss {
                        actions: chunk.iter().map(|&i| transitions[i].action).collect(),
                        old_log_probs: chunk.iter().map(|&i| transitions[i].log_prob).collect(),
                        advantages: normalize_advantages(&raw),
                        returns: chunk.iter().map(|&i| buffer.returns()[i]).collect(),
                        logit_bias,
                        clip_epsilon: cfg.clip_epsilon,
                        value_coef: cfg.value_coef,
                        entropy_coef: cfg.entropy_coef,
                    },
                    last: Cell::new(UpdateStats::default()),
                };
                let (_, mut grads) = loss_gradients(&self.params, obs.view(), &loss)?;
                let grad_norm = grads.clip_global_norm(cfg.max_grad_norm);
                adam_step(&mut self.params, &grads, &mut self.adam, cfg.learning_rate);

                let s = loss.last.get();
                stats.policy_loss += s.policy_loss;
                stats.value_loss += s.value_loss;
                stats.entropy += s.entropy;
                stats.approx_kl += s.approx_kl;
                stats.clip_fraction += s.clip_fraction;
                stats.grad_norm += grad_norm;
                stats.optimizer_steps += 1;
            }
        }
        let k = stats.optimizer_steps as f64;
        stats.policy_loss /= k;
        stats.value_loss /= k;
        stats.entropy /= k;
        stats.approx_kl /= k;
        stats.clip_fraction /= k;
        stats.grad_norm /= k;
        Ok(stats)
    }

    /// Alternate rollouts and updates until `episodes` episodes have
    /// finished. The rollout in which the last episode ends is completed and
    /// trained on, so every run ends on an update boundary.
    pub fn train_episodes(&mut self, env: &mut dyn TrainEnv, episodes: usize) -> Result<TrainingLog> {
        let mut cursor = EpisodeCursor::new();
        let mut updates = 0;
        while cursor.finished().len() < episodes {
            let buffer = self.collect_rollout(env, &mut cursor)?;
            self.update(&buffer)?;
            updates += 1;
        }
        Ok(cursor.into_log(episodes, updates))
    }
}

/// PPO loss that remembers its last evaluation for logging.
struct TrackedLoss {
    inner: PpoLoss,
    last: Cell<UpdateStats>,
}

impl crate::nn::BatchLoss for TrackedLoss {
    fn evaluate(
        &self,
        logits: ndarray::ArrayView2<f64>,
        values: ArrayView1<f64>,
    ) -> (f64, Array2<f64>, ndarray::Array1<f64>) {
        let t = self.inner.terms(logits, values);
        self.last.set(UpdateStats {
            policy_loss: t.policy_loss,
            value_loss: t.value_loss,
            entropy: t.entropy,
            approx_kl: t.approx_kl,
            clip_fraction: t.clip_fraction,
            ..UpdateStats::default()
        });
        (t.total, t.d_logits, t.d_values)
    }
}

/// Shift to mean 0 and scale to unit sample standard deviation (floored at 1e-8).
pub(crate) fn normalize_advantages(raw: &[f64]) -> Vec<f64> {
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = if raw.len() > 1 {
        raw.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std = var.sqrt().max(1e-8);
    raw.iter().map(|a| (a - mean) / std).collect()
}

/// Run the untrained utility agent for `episodes` episodes.
pub fn run_dt_agent(
    env: &mut dyn TrainEnv,
    config: &DtConfig,
    episodes: usize,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    config.validate(env.action_count())?;
    let mut cursor = EpisodeCursor::new();
    while cursor.finished().len() < episodes {
        cursor.current_obs(env);
        let probs = config.distribution(&env.utilities(config));
        let step = env.step(probs.sample(rng))?;
        cursor.record(step.reward, step.done, step.observation, env);
    }
    Ok(cursor.into_log(episodes, 0))
}

/// Train one agent on one environment for `episodes` logged episodes.
pub fn train(
    kind: AgentKind,
    spec: EnvSpec,
    episodes: usize,
    seed: u64,
    config: &AgentConfig,
) -> Result<TrainingLog> {
    match kind {
        AgentKind::Dt => {
            let mut env = spec.build(seed)?;
            run_dt_agent(env.as_mut(), &config.dt, episodes, &mut stream(seed, Stream::Action))
        }
        AgentKind::Ppo | AgentKind::DtPpo => {
            let mut env = spec.build(seed)?;
            let mut agent = PpoAgent::new(spec, config, kind == AgentKind::DtPpo, seed)?;
            agent.train_episodes(env.as_mut(), episodes)
        }
        AgentKind::TlPpo => {
            let EnvSpec::Maze { size } = spec else {
                return Err(Error::InvalidConfig("tlppo runs on mazes only".into()));
            };
            Ok(crate::experiments::tl_pretrain_then_transfer(size, episodes, seed, config, None)?.target_log)
        }
    }
}
