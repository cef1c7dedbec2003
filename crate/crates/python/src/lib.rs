//! Python bindings: environments, utility-agent helpers, guidance fusion,
//! GAE, single-run training and the multi-run experiment runner.

use std::path::PathBuf;

use dtppo::dt::{self, ActionDistribution, DtConfig, UtilityVector};
use dtppo::experiments::{self, ExperimentConfig, RunRecord};
use dtppo::guidance::{self, GuidanceConfig};
use dtppo::ppo::{self, AgentConfig, AgentKind, EnvSpec, TrainEnv};
use dtppo::{rng, Error};
use pyo3::exceptions::{PyNotImplementedError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotImplemented(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::Io { .. } | Error::Csv { .. } => PyOSError::new_err(e.to_string()),
        Error::NonFiniteLoss { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn env_spec(env: &str, maze_size: Option<usize>) -> PyResult<EnvSpec> {
    match (env, maze_size) {
        ("cartpole", None) => Ok(EnvSpec::CartPole),
        ("maze", Some(size)) => Ok(EnvSpec::Maze { size }),
        ("maze", None) => Err(PyValueError::new_err("maze requires maze_size")),
        ("cartpole", Some(_)) => Err(PyValueError::new_err("maze_size only applies to maze")),
        _ => Err(PyValueError::new_err(format!("unknown env '{env}'"))),
    }
}

fn agent_kind(agent: &str) -> PyResult<AgentKind> {
    agent.parse().map_err(to_py)
}

/// A seeded cart-pole or maze environment.
#[pyclass(unsendable)]
struct Env {
    inner: Box<dyn TrainEnv>,
}

#[pymethods]
impl Env {
    #[new]
    #[pyo3(signature = (env, seed, maze_size=None))]
    fn new(env: &str, seed: u64, maze_size: Option<usize>) -> PyResult<Self> {
        let inner = env_spec(env, maze_size)?.build(seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    #[getter]
    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    #[getter]
    fn max_episode_steps(&self) -> usize {
        self.inner.max_episode_steps()
    }

    fn reset(&mut self) -> Vec<f64> {
        self.inner.reset()
    }

    /// Returns (observation, reward, done).
    fn step(&mut self, action: usize) -> PyResult<(Vec<f64>, f64, bool)> {
        let s = self.inner.step(action).map_err(to_py)?;
        Ok((s.observation, s.reward, s.done))
    }

    fn observe(&self) -> Vec<f64> {
        self.inner.observe()
    }

    /// Raw utility scores of the current state.
    fn utilities(&self) -> Vec<f64> {
        self.inner.utilities(&DtConfig::default()).0
    }

    /// The utility agent's action distribution at `temperature`.
    #[pyo3(signature = (temperature=0.1))]
    fn dt_probabilities(&self, temperature: f64) -> PyResult<Vec<f64>> {
        let cfg = DtConfig {
            temperature,
            ..DtConfig::default()
        };
        cfg.validate(self.inner.action_count()).map_err(to_py)?;
        Ok(cfg.distribution(&self.inner.utilities(&cfg)).probs().to_vec())
    }
}

#[pyfunction]
#[pyo3(signature = (utilities, temperature=0.1, min_prob_clamp=1e-12))]
fn tempered_softmax(utilities: Vec<f64>, temperature: f64, min_prob_clamp: f64) -> PyResult<Vec<f64>> {
    if utilities.is_empty() || !(temperature > 0.0) {
        return Err(PyValueError::new_err("need non-empty utilities and temperature > 0"));
    }
    Ok(dt::tempered_softmax(&UtilityVector(utilities), temperature, min_prob_clamp)
        .probs()
        .to_vec())
}

#[pyfunction]
fn reverse_softmax(probs: Vec<f64>) -> PyResult<Vec<f64>> {
    let p = ActionDistribution::new(probs).map_err(to_py)?;
    Ok(dt::reverse_softmax(&p))
}

#[pyfunction]
#[pyo3(signature = (step, decay_steps=20_480, initial_weight=1.0, final_weight=0.0))]
fn weight_schedule(step: u64, decay_steps: u64, initial_weight: f64, final_weight: f64) -> PyResult<f64> {
    let cfg = GuidanceConfig {
        initial_weight,
        final_weight,
        decay_steps,
        ..GuidanceConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    Ok(guidance::weight_schedule(step, &cfg))
}

#[pyfunction]
fn fuse_logits(nn_logits: Vec<f64>, dt_logits: Vec<f64>, w: f64) -> PyResult<Vec<f64>> {
    guidance::fuse_logits(&nn_logits, &dt_logits, w).map_err(to_py)
}

/// Returns (advantages, returns).
#[pyfunction]
#[pyo3(signature = (rewards, values, dones, bootstrap_value, gamma=0.99, lam=0.95))]
fn compute_gae(
    rewards: Vec<f64>,
    values: Vec<f64>,
    dones: Vec<bool>,
    bootstrap_value: f64,
    gamma: f64,
    lam: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    ppo::compute_gae(&rewards, &values, &dones, bootstrap_value, gamma, lam).map_err(to_py)
}

#[pyfunction]
fn child_seed(master: u64, index: u64) -> u64 {
    rng::child_seed(master, index)
}

/// Train one agent; returns a dict with per-episode `rewards` and `steps`
/// plus `total_env_steps`, `time_per_step_ns` and `updates`.
#[pyfunction]
#[pyo3(signature = (agent, env, episodes=500, seed=0, maze_size=None))]
fn train<'py>(
    py: Python<'py>,
    agent: &str,
    env: &str,
    episodes: usize,
    seed: u64,
    maze_size: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = agent_kind(agent)?;
    let spec = env_spec(env, maze_size)?;
    let log = py
        .detach(|| ppo::train(kind, spec, episodes, seed, &AgentConfig::default()))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("rewards", log.rewards())?;
    d.set_item("steps", log.episodes.iter().map(|e| e.steps).collect::<Vec<_>>())?;
    d.set_item("total_env_steps", log.total_env_steps)?;
    d.set_item("time_per_step_ns", log.time_per_step_ns())?;
    d.set_item("updates", log.updates)?;
    Ok(d)
}

fn record_tuple(r: &RunRecord) -> (u64, u64, f64, u64, u64) {
    (r.run_id, r.episode, r.accumulated_reward, r.episode_steps, r.cumulative_wall_time_ns)
}

/// Run `runs` seeded trainings, write the run CSV to `out` and return the
/// rows as (run_id, episode, reward, steps, cumulative_wall_time_ns).
#[pyfunction]
#[pyo3(signature = (env, agent, out, episodes=500, runs=10, seed=0, maze_size=None))]
fn run_experiment(
    py: Python<'_>,
    env: &str,
    agent: &str,
    out: PathBuf,
    episodes: usize,
    runs: usize,
    seed: u64,
    maze_size: Option<usize>,
) -> PyResult<Vec<(u64, u64, f64, u64, u64)>> {
    let cfg = ExperimentConfig {
        env: env_spec(env, maze_size)?,
        agent: agent_kind(agent)?,
        episodes,
        runs,
        master_seed: seed,
        output_path: out,
        agent_config: AgentConfig::default(),
    };
    let records = py.detach(|| experiments::run_experiment(&cfg)).map_err(to_py)?;
    Ok(records.iter().map(record_tuple).collect())
}

/// Aggregate labelled run CSVs into a summary CSV; returns the row count.
#[pyfunction]
fn report(inputs: Vec<(String, PathBuf)>, out: PathBuf) -> PyResult<usize> {
    let mut loaded = Vec::with_capacity(inputs.len());
    for (label, path) in inputs {
        loaded.push((label, experiments::read_run_records(&path).map_err(to_py)?));
    }
    let rows = experiments::aggregate(&loaded).map_err(to_py)?;
    let file = std::fs::File::create(&out).map_err(|e| PyOSError::new_err(format!("{}: {e}", out.display())))?;
    experiments::write_summary(std::io::BufWriter::new(file), &rows).map_err(to_py)?;
    Ok(rows.len())
}

#[pymodule]
fn dtppo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Env>()?;
    m.add_function(wrap_pyfunction!(tempered_softmax, m)?)?;
    m.add_function(wrap_pyfunction!(reverse_softmax, m)?)?;
    m.add_function(wrap_pyfunction!(weight_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_logits, m)?)?;
    m.add_function(wrap_pyfunction!(compute_gae, m)?)?;
    m.add_function(wrap_pyfunction!(child_seed, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    Ok(())
}
