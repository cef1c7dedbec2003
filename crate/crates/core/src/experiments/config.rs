use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::ppo::{AgentConfig, AgentKind, EnvSpec};
use crate::{Error, Result};

/// Keys accepted in key=value config files and as CLI overrides.
const KNOWN_KEYS: &[&str] = &[
    "env",
    "agent",
    "maze_size",
    "episodes",
    "runs",
    "seed",
    "out",
    "dt_temperature",
    "decay_steps",
    "initial_weight",
    "final_weight",
    "update_weight",
    "min_prob_clamp",
    "distance_floor",
    "lr",
    "gamma",
    "clip",
    "rollout_size",
    "minibatch_size",
    "gae_lambda",
    "update_epochs",
    "value_coef",
    "entropy_coef",
    "max_grad_norm",
];

/// Layered string settings: later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse a flat `key = value` file. Blank lines and `#` comments are
    /// ignored; dashes in keys are read as underscores.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", n + 1))
            })?;
            s.set(k.trim(), v.trim())?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = key.replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidConfig(format!("unknown setting '{key}'")));
        }
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Overlay `other` on top of `self`.
    pub fn merged(mut self, other: &Settings) -> Self {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::InvalidConfig(format!("bad value '{v}' for {key}")))
            })
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub agent: AgentKind,
    pub episodes: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub output_path: PathBuf,
    pub agent_config: AgentConfig,
}

impl ExperimentConfig {
    pub const DEFAULT_EPISODES: usize = 500;
    pub const DEFAULT_RUNS: usize = 100;

    pub fn from_settings(s: &Settings) -> Result<Self> {
        let maze_size: Option<usize> = s.parsed("maze_size")?;
        let env = match s.get("env") {
            Some("cartpole") => {
                if maze_size.is_some() {
                    return Err(Error::InvalidConfig("maze_size only applies to env=maze".into()));
                }
                EnvSpec::CartPole
            }
            Some("maze") => EnvSpec::Maze {
                size: maze_size
                    .ok_or_else(|| Error::InvalidConfig("env=maze requires maze_size".into()))?,
            },
            Some(other) => return Err(Error::InvalidConfig(format!("unknown env '{other}'"))),
            None => return Err(Error::InvalidConfig("env is required".into())),
        };
        let agent: AgentKind = s
            .get("agent")
            .ok_or_else(|| Error::InvalidConfig("agent is required".into()))?
            .parse()?;
        let output_path = s
            .get("out")
            .map(PathBuf::from)
            .ok_or_else(|| Error::InvalidConfig("out is required".into()))?;

        let mut ac = AgentConfig::default();
        if let Some(t) = s.parsed::<f64>("dt_temperature")? {
            ac.dt.temperature = t;
            ac.guidance.dt_temperature = t;
        }
        macro_rules! apply {
            ($key:literal => $($field:tt).+) => {
                if let Some(v) = s.parsed($key)? {
                    ac.$($field).+ = v;
                }
            };
        }
        apply!("decay_steps" => guidance.decay_steps);
        apply!("initial_weight" => guidance.initial_weight);
        apply!("final_weight" => guidance.final_weight);
        apply!("update_weight" => guidance.update_weight);
        apply!("min_prob_clamp" => dt.min_prob_clamp);
        apply!("distance_floor" => dt.distance_floor);
        apply!("lr" => ppo.learning_rate);
        apply!("gamma" => ppo.gamma);
        apply!("clip" => ppo.clip_epsilon);
        apply!("rollout_size" => ppo.rollout_size);
        apply!("minibatch_size" => ppo.minibatch_size);
        apply!("gae_lambda" => ppo.gae_lambda);
        apply!("update_epochs" => ppo.update_epochs);
        apply!("value_coef" => ppo.value_coef);
        apply!("entropy_coef" => ppo.entropy_coef);
        apply!("max_grad_norm" => ppo.max_grad_norm);

        let cfg = Self {
            env,
            agent,
            episodes: s.parsed("episodes")?.unwrap_or(Self::DEFAULT_EPISODES),
            runs: s.parsed("runs")?.unwrap_or(Self::DEFAULT_RUNS),
            master_seed: s.parsed("seed")?.unwrap_or(0),
            output_path,
            agent_config: ac,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.episodes == 0 {
            return Err(Error::InvalidConfig("runs and episodes must be >= 1".into()));
        }
        match (self.agent, self.env) {
            (AgentKind::TlPpo, EnvSpec::CartPole) => {
                return Err(Error::InvalidConfig(
                    "tlppo is evaluated on mazes only".into(),
                ))
            }
            (AgentKind::TlPpo, EnvSpec::Maze { size }) if size <= 3 => {
                return Err(Error::InvalidConfig(
                    "tlppo needs a target maze larger than the 3x3 pretraining maze".into(),
                ))
            }
            (_, EnvSpec::Maze { size }) if size < 2 => return Err(Error::MazeTooSmall(size)),
            _ => {}
        }
        self.agent_config.validate(self.env.action_count())
    }
}
