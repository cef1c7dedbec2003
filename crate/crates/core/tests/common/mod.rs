//! Property checks shared by the integration tests and the acceptance harness.
//! Each returns a short summary on success and the first violation on failure.

#![allow(dead_code)]

use std::collections::VecDeque;

use dtppo::dt::{tempered_softmax, DtConfig, DtUtility, UtilityVector};
use dtppo::envs::{CartPole, CartPoleParams, CartPoleState, Environment, Maze, MazeAction, MazeGrid, MazePosition};
use dtppo::guidance::{guided_action_distribution, GuidanceConfig, GuidanceState};
use dtppo::nn::{loss_gradients, mlp_forward, mlp_init, BatchLoss, MlpParams};
use dtppo::ppo::{compute_gae, PpoLoss};
use dtppo::rng::{stream, Rng, Stream};
use ndarray::Array2;
use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

pub type Check = std::result::Result<String, String>;

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor so entries with near-zero gradient are judged on an
/// absolute scale instead of amplifying rounding noise.
const FD_SCALE_FLOOR: f64 = 1e-6;
const SAMPLED_ENTRIES: usize = 100;

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// A PPO minibatch around `params` with a fused utility prior, old
/// log-probabilities chosen so every ratio sits in [0.9, 1.1] (well inside
/// the clip window) and a non-zero entropy bonus.
fn random_problem(seed: u64) -> (MlpParams, Array2<f64>, PpoLoss) {
    let mut rng = Rng::seed_from_u64(seed);
    let obs_dim = 4;
    let actions = 2 + (seed as usize % 3);
    let mut params = mlp_init(obs_dim, actions, &mut rng);
    // the fresh policy head is all zeros; give the check something to bite on
    for v in params.policy.layers.last_mut().unwrap().weight.iter_mut() {
        *v = 0.3 * normal(&mut rng);
    }
    for layer in params.policy.layers.iter_mut().chain(params.value.layers.iter_mut()) {
        for v in layer.bias.iter_mut() {
            *v = 0.1 * normal(&mut rng);
        }
    }

    let n = 24;
    let obs = Array2::from_shape_fn((n, obs_dim), |_| normal(&mut rng));
    let w: f64 = rng.random();
    let mut bias = Array2::zeros((n, actions));
    for mut row in bias.rows_mut() {
        let u = UtilityVector((0..actions).map(|_| normal(&mut rng)).collect());
        let p = tempered_softmax(&u, 0.5, 1e-12);
        for (b, q) in row.iter_mut().zip(p.probs()) {
            *b = w * q.ln();
        }
    }

    let (logits, _) = params.forward_batch(obs.view());
    let mut acts = Vec::with_capacity(n);
    let mut old = Vec::with_capacity(n);
    for i in 0..n {
        let fused: Vec<f64> = logits.row(i).iter().zip(bias.row(i)).map(|(z, b)| z + b).collect();
        let lp = log_softmax(&fused);
        let a = rng.random_range(0..actions);
        let ratio = 0.9 + 0.2 * rng.random::<f64>();
        acts.push(a);
        old.push(lp[a] - ratio.ln());
    }
    let loss = PpoLoss {
        actions: acts,
        old_log_probs: old,
        advantages: (0..n).map(|_| normal(&mut rng)).collect(),
        returns: (0..n).map(|_| normal(&mut rng)).collect(),
        logit_bias: bias,
        clip_epsilon: 0.2,
        value_coef: 0.5,
        entropy_coef: 0.01,
    };
    (params, obs, loss)
}

fn loss_at(params: &MlpParams, obs: &Array2<f64>, loss: &PpoLoss) -> f64 {
    let (logits, values) = params.forward_batch(obs.view());
    loss.evaluate(logits.view(), values.view()).0
}

/// Central finite differences against the analytic gradient for every
/// tensor. Tensors with more than 100 entries are spot-checked at 100
/// random entries; smaller ones are checked exhaustively.
pub fn gradient_check(seed: u64) -> Check {
    let (params, obs, loss) = random_problem(seed);
    let (_, grads) = loss_gradients(&params, obs.view(), &loss).map_err(|e| e.to_string())?;
    let names = params.tensor_shapes();
    let analytic: Vec<Vec<f64>> = grads.params().tensors().iter().map(|t| t.to_vec()).collect();
    let mut pick = Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut probe = params.clone();
    let mut checked = 0usize;
    let mut worst = 0.0f64;

    for (t, (name, _)) in names.iter().enumerate() {
        let len = analytic[t].len();
        let entries: Vec<usize> = if len > SAMPLED_ENTRIES {
            (0..SAMPLED_ENTRIES).map(|_| pick.random_range(0..len)).collect()
        } else {
            (0..len).collect()
        };
        for j in entries {
            let orig = probe.tensors()[t][j];
            probe.tensors_mut()[t][j] = orig + FD_STEP;
            let up = loss_at(&probe, &obs, &loss);
            probe.tensors_mut()[t][j] = orig - FD_STEP;
            let down = loss_at(&probe, &obs, &loss);
            probe.tensors_mut()[t][j] = orig;

            let fd = (up - down) / (2.0 * FD_STEP);
            let a = analytic[t][j];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(FD_SCALE_FLOOR);
            worst = worst.max(rel);
            if rel > FD_REL_TOL {
                return Err(format!(
                    "seed {seed}: {name}[{j}] analytic {a:.10e} vs numeric {fd:.10e} (rel {rel:.2e})"
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} entries, worst rel err {worst:.2e}"))
}

fn random_cartpole_state(rng: &mut Rng) -> CartPoleState {
    CartPoleState {
        x: rng.random_range(-2.4..2.4),
        x_dot: rng.random_range(-2.0..2.0),
        theta: rng.random_range(-0.2..0.2),
        theta_dot: rng.random_range(-2.0..2.0),
    }
}

fn weights(w: f64) -> GuidanceState {
    let mut state = GuidanceState::new(GuidanceConfig {
        decay_steps: 1,
        ..GuidanceConfig::default()
    });
    if w == 0.0 {
        state.advance();
    }
    state
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Fresh parameters: at w = 1 the fused distribution is the utility agent's,
/// at w = 0 it is the network's. Half the states are cart-pole, half maze.
pub fn fusion_endpoints(states: usize, seed: u64, tol: f64) -> Check {
    let mut rng = Rng::seed_from_u64(seed);
    let dt_cfg = DtConfig::default();
    let cp_params = mlp_init(4, 2, &mut rng);
    let mut cartpole = CartPole::new(CartPoleParams::default(), Rng::seed_from_u64(seed));
    let mut maze = Maze::generate(6, &mut rng).map_err(|e| e.to_string())?;
    let mz_params = mlp_init(2, 4, &mut rng);
    let mut worst = 0.0f64;

    for i in 0..states {
        let (params, obs, dt_probs) = if i % 2 == 0 {
            cartpole.set_state(random_cartpole_state(&mut rng));
            let obs = cartpole.observe();
            (&cp_params, obs, dt_cfg.distribution(&cartpole.utilities(&dt_cfg)))
        } else {
            let m = maze.grid().size();
            let pos = MazePosition::new(rng.random_range(0..m), rng.random_range(0..m));
            maze.set_position(pos).map_err(|e| e.to_string())?;
            (&mz_params, maze.observe(), dt_cfg.distribution(&maze.utilities(&dt_cfg)))
        };
        let (nn_logits, _) = mlp_forward(params, &obs).map_err(|e| e.to_string())?;
        let nn_probs: Vec<f64> = {
            let lp = log_softmax(&nn_logits);
            lp.iter().map(|l| l.exp()).collect()
        };

        let at_one = guided_action_distribution(params, &obs, &dt_probs, &weights(1.0))
            .map_err(|e| e.to_string())?;
        let at_zero = guided_action_distribution(params, &obs, &dt_probs, &weights(0.0))
            .map_err(|e| e.to_string())?;
        let d1 = max_abs_diff(at_one.distribution.probs(), dt_probs.probs());
        let d0 = max_abs_diff(at_zero.distribution.probs(), &nn_probs);
        worst = worst.max(d1).max(d0);
        if d1 > tol || d0 > tol {
            return Err(format!("state {i}: |w=1 - dt| = {d1:.2e}, |w=0 - nn| = {d0:.2e}"));
        }
    }
    Ok(format!("{states} states, worst deviation {worst:.2e}"))
}

fn brute_force_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let n = rewards.len();
    (0..n)
        .map(|t| {
            let mut g = 0.0;
            let mut discount = 1.0;
            let mut k = t;
            loop {
                g += discount * rewards[k];
                if dones[k] {
                    break;
                }
                discount *= gamma;
                k += 1;
                if k == n {
                    g += discount * bootstrap;
                    break;
                }
            }
            g
        })
        .collect()
}

/// At lambda = 1 the advantage is the discounted return (cut at episode
/// ends, bootstrapped at the buffer end) minus the value estimate.
pub fn gae_oracle(trajectories: usize, seed: u64, tol: f64) -> Check {
    let mut rng = Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..trajectories {
        let n = rng.random_range(1..=8);
        let rewards: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let values: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let dones: Vec<bool> = (0..n).map(|_| rng.random_bool(0.25)).collect();
        let bootstrap = normal(&mut rng);
        let gamma = rng.random_range(0.5..1.0);
        let (adv, ret) =
            compute_gae(&rewards, &values, &dones, bootstrap, gamma, 1.0).map_err(|e| e.to_string())?;
        let oracle = brute_force_returns(&rewards, &dones, bootstrap, gamma);
        for t in 0..n {
            let e = (adv[t] - (oracle[t] - values[t])).abs().max((ret[t] - oracle[t]).abs());
            worst = worst.max(e);
            if e > tol {
                return Err(format!("trajectory {k} step {t}: error {e:.2e}"));
            }
        }
    }
    Ok(format!("{trajectories} trajectories, worst error {worst:.2e}"))
}

fn bfs_reach(grid: &MazeGrid) -> Vec<bool> {
    let m = grid.size();
    let mut seen = vec![false; m * m];
    let mut queue = VecDeque::from([grid.entry()]);
    seen[grid.entry().y * m + grid.entry().x] = true;
    while let Some(p) = queue.pop_front() {
        for dir in MazeAction::ALL {
            if let Some(q) = grid.passage(p, dir) {
                if !seen[q.y * m + q.x] {
                    seen[q.y * m + q.x] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    seen
}

/// Every generated maze is a spanning tree of the grid: m^2 - 1 passages and
/// every cell (the exit included) reachable from the entry.
pub fn maze_integrity(sizes: std::ops::RangeInclusive<usize>, seeds: u64) -> Check {
    let mut count = 0;
    for m in sizes {
        for seed in 0..seeds {
            let grid = MazeGrid::generate(m, &mut stream(seed, Stream::Maze)).map_err(|e| e.to_string())?;
            if grid.passage_count() != m * m - 1 {
                return Err(format!("m={m} seed={seed}: {} passages", grid.passage_count()));
            }
            let reach = bfs_reach(&grid);
            if !reach.iter().all(|r| *r) {
                return Err(format!("m={m} seed={seed}: unreachable cells"));
            }
            let exit = grid.exit();
            if !reach[exit.y * m + exit.x] {
                return Err(format!("m={m} seed={seed}: exit unreachable"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} mazes"))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Ordinary least-squares slope of `ys` against 0, 1, 2, ...
pub fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = mean(ys);
    let (num, den) = ys.iter().enumerate().fold((0.0, 0.0), |(num, den), (i, y)| {
        let dx = i as f64 - xbar;
        (num + dx * (y - ybar), den + dx * dx)
    });
    num / den
}

pub fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let len = rows[0].len();
    (0..len).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
}
