use rand::{Rng as _, RngCore};

use super::{Environment, StepResult};
use crate::rng::Rng;
use crate::{Error, Result};

const INIT_HALF_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub const ZERO: Self = Self {
        x: 0.0,
        x_dot: 0.0,
        theta: 0.0,
        theta_dot: 0.0,
    };

    /// Each component i.i.d. uniform on [-0.05, 0.05].
    pub fn sample<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut draw = || -INIT_HALF_RANGE + 2.0 * INIT_HALF_RANGE * rng.random::<f64>();
        Self {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        }
    }

    /// Raw (x, x_dot, theta, theta_dot) observation.
    pub fn observe(&self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.x_dot.is_finite()
            && self.theta.is_finite()
            && self.theta_dot.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force_mag: f64,
    /// Integration step in seconds.
    pub tau: f64,
    pub angle_limit: f64,
    pub position_limit: f64,
    pub max_steps: usize,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            half_length: 0.5,
            force_mag: 10.0,
            tau: 0.02,
            angle_limit: 0.2095,
            position_limit: 2.4,
            max_steps: 100,
        }
    }
}

impl CartPoleParams {
    /// One explicit-Euler step of the cart-pole ODE under horizontal `force`.
    pub fn integrate(&self, s: &CartPoleState, force: f64) -> CartPoleState {
        let total_mass = self.mass_cart + self.mass_pole;
        let pole_ml = self.mass_pole * self.half_length;
        let (sin, cos) = s.theta.sin_cos();

        let temp = (force + pole_ml * s.theta_dot * s.theta_dot * sin) / total_mass;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (4.0 / 3.0 - self.mass_pole * cos * cos / total_mass));
        let x_acc = temp - pole_ml * theta_acc * cos / total_mass;

        CartPoleState {
            x: s.x + self.tau * s.x_dot,
            x_dot: s.x_dot + self.tau * x_acc,
            theta: s.theta + self.tau * s.theta_dot,
            theta_dot: s.theta_dot + self.tau * theta_acc,
        }
    }

    pub fn out_of_bounds(&self, s: &CartPoleState) -> bool {
        s.x.abs() > self.position_limit || s.theta.abs() > self.angle_limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartPoleAction {
    Left = 0,
    Right = 1,
}

impl TryFrom<usize> for CartPoleAction {
    type Error = Error;

    fn try_from(action: usize) -> Result<Self> {
        match action {
            0 => Ok(Self::Left),
            1 => Ok(Self::Right),
            _ => Err(Error::InvalidAction { action, count: 2 }),
        }
    }
}

/// Cart pole with +1 reward per step, terminating when the pole tilts past
/// the angle limit, the cart leaves the track, or the step cap is reached.
#[derive(Debug, Clone)]
pub struct CartPole {
    params: CartPoleParams,
    state: CartPoleState,
    steps: usize,
    done: bool,
    rng: Rng,
}

impl CartPole {
    pub fn new(params: CartPoleParams, rng: Rng) -> Self {
        Self {
            params,
            state: CartPoleState::ZERO,
            steps: 0,
            done: true,
            rng,
        }
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn state(&self) -> &CartPoleState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Place the environment in an arbitrary live state.
    pub fn set_state(&mut self, state: CartPoleState) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    pub fn step_action(&mut self, action: CartPoleAction) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let force = match action {
            CartPoleAction::Left => -self.params.force_mag,
            CartPoleAction::Right => self.params.force_mag,
        };
        self.state = self.params.integrate(&self.state, force);
        self.steps += 1;
        self.done = self.params.out_of_bounds(&self.state) || self.steps >= self.params.max_steps;
        Ok(StepResult {
            observation: self.state.observe(),
            reward: 1.0,
            done: self.done,
            steps_taken: self.steps,
        })
    }
}

impl Environment for CartPole {
    fn obs_dim(&self) -> usize {
        4
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = CartPoleState::sample(&mut self.rng);
        self.steps = 0;
        self.done = false;
        self.state.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        self.step_action(CartPoleAction::try_from(action)?)
    }

    fn observe(&self) -> Vec<f64> {
        self.state.observe()
    }

    fn max_episode_steps(&self) -> usize {
        self.params.max_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    /// Always yields the bit pattern that maps to 0.5 under `random::<f64>()`.
    struct MidpointRng;

    impl RngCore for MidpointRng {
        fn next_u32(&mut self) -> u32 {
            1 << 31
        }
        fn next_u64(&mut self) -> u64 {
            1 << 63
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0);
        }
    }

    fn live(state: CartPoleState) -> CartPole {
        let mut env = CartPole::new(CartPoleParams::default(), stream(0, Stream::Env));
        env.set_state(state);
        env
    }

    #[test]
    fn midpoint_draws_give_zero_state() {
        assert_eq!(CartPoleState::sample(&mut MidpointRng), CartPoleState::ZERO);
    }

    #[test]
    fn reset_in_range_and_deterministic() {
        for seed in 0..50 {
            let mut a = CartPole::new(CartPoleParams::default(), stream(seed, Stream::Env));
            let mut b = CartPole::new(CartPoleParams::default(), stream(seed, Stream::Env));
            let oa = a.reset();
            assert_eq!(oa, b.reset());
            assert!(oa.iter().all(|v| (-0.05..=0.05).contains(v)));
        }
    }

    #[test]
    fn push_right_from_rest() {
        // Hand evaluation: temp = 10/1.1, theta_acc = -temp / (0.5 (4/3 - 0.1/1.1)),
        // x_acc = temp - 0.05 theta_acc / 1.1.
        let temp = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        let mut env = live(CartPoleState::ZERO);
        let r = env.step(1).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(!r.done);
        let expected = [0.0, 0.02 * x_acc, 0.0, 0.02 * theta_acc];
        for (got, want) in r.observation.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((r.observation[1] - 0.195122).abs() < 5e-7);
        assert!((r.observation[3] + 0.292683).abs() < 5e-7);
    }

    #[test]
    fn push_left_mirrors_right() {
        let right = live(CartPoleState::ZERO).step(1).unwrap().observation;
        let left = live(CartPoleState::ZERO).step(0).unwrap().observation;
        assert_eq!(left[1], -right[1]);
        assert_eq!(left[3], -right[3]);
    }

    #[test]
    fn tilt_past_limit_terminates() {
        let mut env = live(CartPoleState {
            theta: 0.2,
            theta_dot: 0.5,
            ..CartPoleState::ZERO
        });
        let r = env.step(1).unwrap();
        assert!(env.state().theta >= 0.21);
        assert!(r.done);
        assert!(matches!(env.step(0), Err(Error::EpisodeDone)));
    }

    #[test]
    fn zero_force_upright_drifts_linearly() {
        let params = CartPoleParams::default();
        let mut s = CartPoleState {
            x: 0.3,
            x_dot: 0.7,
            ..CartPoleState::ZERO
        };
        for _ in 0..20 {
            let next = params.integrate(&s, 0.0);
            assert_eq!(next.theta, 0.0);
            assert_eq!(next.theta_dot, 0.0);
            assert_eq!(next.x_dot, s.x_dot);
            assert!((next.x - (s.x + params.tau * s.x_dot)).abs() < 1e-15);
            s = next;
        }
    }

    #[test]
    fn episodes_capped_at_max_steps() {
        let mut env = CartPole::new(CartPoleParams::default(), stream(3, Stream::Env));
        for _ in 0..20 {
            env.reset();
            let mut n = 0;
            let mut flip = 0;
            loop {
                n += 1;
                // alternate to keep the pole near upright
                flip ^= 1;
                if env.step(flip).unwrap().done {
                    break;
                }
            }
            assert!(n <= 100);
        }
    }

    #[test]
    fn observe_is_identity() {
        let s = CartPoleState {
            x: 1.0,
            x_dot: -1.0,
            theta: 0.1,
            theta_dot: 0.2,
        };
        assert_eq!(s.observe(), vec![1.0, -1.0, 0.1, 0.2]);
        assert_eq!(CartPoleState::ZERO.observe(), vec![0.0; 4]);
    }

    #[test]
    fn invalid_action_rejected() {
        let mut env = live(CartPoleState::ZERO);
        assert!(matches!(env.step(2), Err(Error::InvalidAction { .. })));
    }
}
