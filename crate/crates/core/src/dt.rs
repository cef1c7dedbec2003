//! Decision-theory agents.
//!
//! Utilities score each action from designer knowledge; a tempered softmax
//! turns them into a near-greedy action distribution, and the reverse
//! softmax (elementwise log) turns that distribution back into logits that
//! can be added to a network's output.

use rand::{Rng as _, RngCore};

use crate::envs::{CartPole, Maze, MazeAction, MazeGrid, MazePosition};
use crate::{Error, Result};

/// Angle normalizer for the cart-pole utility (the +-12 degree limit).
pub const CARTPOLE_ANGLE_SCALE: f64 = 0.209;

/// One utility per action, in the environment's action index order.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector(pub Vec<f64>);

impl UtilityVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Categorical distribution over action indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    /// Validating constructor: entries in (0, 1], summing to 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidConfig("empty action distribution".into()));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "not a probability vector: {probs:?}"
            )));
        }
        Ok(Self { probs })
    }

    /// Temperature-1 softmax of arbitrary logits, without clamping.
    pub fn from_logits(logits: &[f64]) -> Self {
        Self {
            probs: softmax(logits, 1.0),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    /// Categorical draw by inverse CDF on a single uniform.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtConfig {
    pub temperature: f64,
    pub min_prob_clamp: f64,
    pub distance_floor: f64,
}

impl Default for DtConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            min_prob_clamp: 1e-12,
            distance_floor: 0.5,
        }
    }
}

impl DtConfig {
    pub fn validate(&self, action_count: usize) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig("dt temperature must be > 0".into()));
        }
        if !(self.min_prob_clamp > 0.0 && self.min_prob_clamp < 1.0 / action_count as f64) {
            return Err(Error::InvalidConfig(
                "min_prob_clamp must lie in (0, 1/action_count)".into(),
            ));
        }
        if !(self.distance_floor > 0.0) {
            return Err(Error::InvalidConfig("distance_floor must be > 0".into()));
        }
        Ok(())
    }

    pub fn distribution(&self, u: &UtilityVector) -> ActionDistribution {
        tempered_softmax(u, self.temperature, self.min_prob_clamp)
    }
}

/// Environments that expose enough raw state for a utility function.
pub trait DtUtility {
    fn utilities(&self, config: &DtConfig) -> UtilityVector;
}

impl DtUtility for CartPole {
    fn utilities(&self, _config: &DtConfig) -> UtilityVector {
        cartpole_utilities(self.state().theta)
    }
}

impl DtUtility for Maze {
    fn utilities(&self, config: &DtConfig) -> UtilityVector {
        maze_utilities(self.grid(), self.position(), config)
    }
}

/// [left, right] = [-theta/0.209, +theta/0.209].
pub fn cartpole_utilities(theta: f64) -> UtilityVector {
    let u = theta / CARTPOLE_ANGLE_SCALE;
    UtilityVector(vec![-u, u])
}

/// Inverse Euclidean distance to the exit from the cell each open direction
/// leads to; blocked directions score 0.
pub fn maze_utilities(grid: &MazeGrid, pos: MazePosition, config: &DtConfig) -> UtilityVector {
    let exit = grid.exit();
    let values = MazeAction::ALL
        .iter()
        .map(|&dir| match grid.passage(pos, dir) {
            None => 0.0,
            Some(next) => {
                let dx = next.x as f64 - exit.x as f64;
                let dy = next.y as f64 - exit.y as f64;
                1.0 / dx.hypot(dy).max(config.distance_floor)
            }
        })
        .collect();
    UtilityVector(values)
}

/// Softmax of `u / temperature` with entries floored at `min_prob_clamp`.
///
/// Clamped entries are pinned at the floor and the remaining mass is
/// rescaled across the unclamped ones, so the result sums to one and every
/// entry is at least the floor.
pub fn tempered_softmax(
    u: &UtilityVector,
    temperature: f64,
    min_prob_clamp: f64,
) -> ActionDistribution {
    let raw = softmax(u.values(), temperature);
    let n = raw.len();
    let mut pinned = vec![false; n];
    let mut probs = raw.clone();
    loop {
        let newly: Vec<usize> = (0..n)
            .filter(|&i| !pinned[i] && probs[i] < min_prob_clamp)
            .collect();
        if newly.is_empty() {
            break;
        }
        for i in newly {
            pinned[i] = true;
        }
        let n_pinned = pinned.iter().filter(|p| **p).count();
        let free_mass = 1.0 - min_prob_clamp * n_pinned as f64;
        let free_raw: f64 = (0..n).filter(|&i| !pinned[i]).map(|i| raw[i]).sum();
        for i in 0..n {
            probs[i] = if pinned[i] {
                min_prob_clamp
            } else {
                raw[i] * free_mass / free_raw
            };
        }
    }
    ActionDistribution { probs }
}

/// Elementwise natural log: logits equal to the source scores up to a shared
/// additive constant.
pub fn reverse_softmax(p: &ActionDistribution) -> Vec<f64> {
    p.probs().iter().map(|x| x.ln()).collect()
}

pub fn dt_select_action<R: RngCore + ?Sized>(p: &ActionDistribution, rng: &mut R) -> usize {
    p.sample(rng)
}

pub(crate) fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits
        .iter()
        .map(|x| x / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|x| (x / temperature - max).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    logits.iter().map(|x| x - lse).collect()
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::rng::{stream, Stream};

    const CLAMP: f64 = 1e-12;

    #[test]
    fn cartpole_utility_values() {
        assert_eq!(cartpole_utilities(0.209).0, vec![-1.0, 1.0]);
        assert_eq!(cartpole_utilities(0.0).0, vec![-0.0, 0.0]);
        let u = cartpole_utilities(-0.1045).0;
        assert!((u[0] - 0.5).abs() < 1e-12 && (u[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn maze_utility_open_down_from_center() {
        // Open corridor (2,2) -> (2,3) on a 5x5 grid, everything else closed.
        let mut walls = vec![[true; 4]; 25];
        walls[2 * 5 + 2][MazeAction::Down as usize] = false;
        walls[3 * 5 + 2][MazeAction::Up as usize] = false;
        let grid = MazeGrid::from_walls(5, walls).unwrap();
        let u = maze_utilities(&grid, MazePosition::new(2, 2), &DtConfig::default()).0;
        assert!((u[MazeAction::Down as usize] - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((u[1] - 0.44721).abs() < 1e-5);
        assert_eq!(u[MazeAction::Up as usize], 0.0);
        assert_eq!(u[MazeAction::Left as usize], 0.0);
        assert_eq!(u[MazeAction::Right as usize], 0.0);
    }

    #[test]
    fn maze_utility_at_exit_uses_floor() {
        let mut walls = vec![[true; 4]; 25];
        walls[4 * 5 + 3][MazeAction::Right as usize] = false;
        walls[4 * 5 + 4][MazeAction::Left as usize] = false;
        let grid = MazeGrid::from_walls(5, walls).unwrap();
        let u = maze_utilities(&grid, MazePosition::new(3, 4), &DtConfig::default()).0;
        assert_eq!(u[MazeAction::Right as usize], 2.0);
    }

    #[test]
    fn blocked_directions_score_zero() {
        let cfg = DtConfig::default();
        for seed in 0..50 {
            let grid = MazeGrid::generate(6, &mut stream(seed, Stream::Maze)).unwrap();
            for y in 0..6 {
                for x in 0..6 {
                    let p = MazePosition::new(x, y);
                    let u = maze_utilities(&grid, p, &cfg);
                    for dir in MazeAction::ALL {
                        if grid.is_blocked(p, dir) {
                            assert_eq!(u.0[dir as usize], 0.0);
                        } else {
                            assert!(u.0[dir as usize] > 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn closer_open_direction_scores_higher() {
        let cfg = DtConfig::default();
        for seed in 0..50 {
            let grid = MazeGrid::generate(7, &mut stream(seed, Stream::Maze)).unwrap();
            let exit = grid.exit();
            let dist = |p: MazePosition| {
                ((p.x as f64 - exit.x as f64).powi(2) + (p.y as f64 - exit.y as f64).powi(2)).sqrt()
            };
            for y in 0..7 {
                for x in 0..7 {
                    let p = MazePosition::new(x, y);
                    let u = maze_utilities(&grid, p, &cfg);
                    let open: Vec<_> = MazeAction::ALL
                        .iter()
                        .filter_map(|&d| grid.passage(p, d).map(|q| (d, dist(q))))
                        .collect();
                    for &(a, da) in &open {
                        for &(b, db) in &open {
                            if da < db && da >= cfg.distance_floor {
                                assert!(u.0[a as usize] > u.0[b as usize]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn softmax_examples() {
        let p = tempered_softmax(&UtilityVector(vec![0.0, 0.0]), 0.37, CLAMP);
        assert_eq!(p.probs(), &[0.5, 0.5]);

        let e2 = 2f64.exp();
        let p = tempered_softmax(&UtilityVector(vec![-1.0, 1.0]), 1.0, CLAMP);
        assert!((p.probs()[0] - 1.0 / (1.0 + e2)).abs() < 1e-15);
        assert!((p.probs()[1] - e2 / (1.0 + e2)).abs() < 1e-15);
        assert!((p.probs()[0] - 0.11920).abs() < 1e-5);

        let p = tempered_softmax(&UtilityVector(vec![-1.0, 1.0]), 0.1, CLAMP);
        assert!(p.probs()[1] > 0.9999);
    }

    #[test]
    fn clamp_pins_tiny_entries() {
        let p = tempered_softmax(&UtilityVector(vec![10.0, -10.0, -10.0]), 0.01, CLAMP);
        assert_eq!(p.probs()[1], CLAMP);
        assert_eq!(p.probs()[2], CLAMP);
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        ActionDistribution::new(p.probs().to_vec()).unwrap();
        let logits = reverse_softmax(&p);
        assert!(logits.iter().all(|l| *l >= CLAMP.ln()));
    }

    #[test]
    fn reverse_softmax_uniform() {
        let l = reverse_softmax(&ActionDistribution::new(vec![0.5, 0.5]).unwrap());
        assert!((l[0] + 0.69315).abs() < 1e-5);
        assert_eq!(l[0], l[1]);
    }

    #[test]
    fn config_validation() {
        assert!(DtConfig::default().validate(4).is_ok());
        let bad = DtConfig {
            temperature: 0.0,
            ..DtConfig::default()
        };
        assert!(bad.validate(2).is_err());
        let bad = DtConfig {
            min_prob_clamp: 0.3,
            ..DtConfig::default()
        };
        assert!(bad.validate(4).is_err());
    }

    #[test]
    fn sampler_concentrates_on_dominant_action() {
        let p = tempered_softmax(&UtilityVector(vec![5.0, 0.0, 0.0, 0.0]), 0.1, CLAMP);
        let mut rng = stream(9, Stream::Action);
        let hits = (0..1000)
            .filter(|_| dt_select_action(&p, &mut rng) == 0)
            .count();
        assert!(hits >= 990);
    }

    #[test]
    fn sampler_uniform_frequencies() {
        let p = ActionDistribution::new(vec![0.25; 4]).unwrap();
        let mut rng = stream(10, Stream::Action);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[dt_select_action(&p, &mut rng)] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((0.22..=0.28).contains(&f), "{f}");
        }
    }

    #[test]
    fn sampler_deterministic() {
        let p = ActionDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let a: Vec<_> = {
            let mut r = stream(5, Stream::Action);
            (0..50).map(|_| p.sample(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = stream(5, Stream::Action);
            (0..50).map(|_| p.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    fn utilities() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, 2..=4)
    }

    fn temperature() -> impl Strategy<Value = f64> {
        prop::sample::select(vec![0.05, 0.1, 1.0, 10.0])
    }

    proptest! {
        #[test]
        fn cartpole_antisymmetric(theta in -0.5..0.5f64) {
            let pos = cartpole_utilities(theta).0;
            let mut neg = cartpole_utilities(-theta).0;
            neg.reverse();
            prop_assert_eq!(pos, neg);
        }

        #[test]
        fn softmax_sums_to_one(u in utilities(), t in temperature()) {
            let p = tempered_softmax(&UtilityVector(u), t, CLAMP);
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.probs().iter().all(|x| *x >= CLAMP && *x <= 1.0));
        }

        #[test]
        fn softmax_shift_invariant(u in utilities(), t in temperature(), c in -5.0..5.0f64) {
            let p = tempered_softmax(&UtilityVector(u.clone()), t, CLAMP);
            let shifted: Vec<f64> = u.iter().map(|x| x + c).collect();
            let q = tempered_softmax(&UtilityVector(shifted), t, CLAMP);
            for (a, b) in p.probs().iter().zip(q.probs()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn log_softmax_recovers_utilities(u in prop::collection::vec(-5.0..5.0f64, 2..=4)) {
            let l = reverse_softmax(&tempered_softmax(&UtilityVector(u.clone()), 1.0, CLAMP));
            let offset = u[0] - l[0];
            for (ui, li) in u.iter().zip(&l) {
                prop_assert!((ui - li - offset).abs() < 1e-9);
            }
        }

        #[test]
        fn reverse_softmax_preserves_argmax(u in utilities(), t in temperature()) {
            let p = tempered_softmax(&UtilityVector(u.clone()), t, CLAMP);
            let l = reverse_softmax(&p);
            prop_assert_eq!(argmax(&l), p.argmax());
            // Ties can collapse under clamping; only check when the winner is strict.
            let best = argmax(&u);
            let runner_up = u.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, x)| *x).fold(f64::NEG_INFINITY, f64::max);
            if (u[best] - runner_up) / t > 1e-6 && p.probs()[best] > CLAMP {
                prop_assert_eq!(argmax(&l), best);
            }
        }
    }
}
