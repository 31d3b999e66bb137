//! Continuous Mountain Car: an underpowered car in a valley must build
//! momentum to reach the flag on the right hill.

use rand::Rng as _;

use super::{Action, ActionSpace, EnvError, EnvKind, Environment};
use crate::seeding::rng_from_seed;

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.45;
pub const GOAL_VELOCITY: f64 = 0.0;
pub const POWER: f64 = 0.0015;
pub const GRAVITY: f64 = 0.0025;
pub const MAX_STEPS: usize = 999;
pub const GOAL_REWARD: f64 = 100.0;
pub const ACTION_COST: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MountainCarState {
    pub position: f64,
    pub velocity: f64,
}

impl MountainCarState {
    /// One step of the dynamics: `(next state, reward, reached goal)`.
    /// `force` is clamped to `[-1, 1]`.
    pub fn step(self, force: f64) -> (Self, f64, bool) {
        let force = force.clamp(-1.0, 1.0);
        let mut velocity = self.velocity + force * POWER - GRAVITY * (3.0 * self.position).cos();
        velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
        let mut position = self.position + velocity;
        position = position.clamp(MIN_POSITION, MAX_POSITION);
        if position == MIN_POSITION && velocity < 0.0 {
            velocity = 0.0;
        }
        let goal = position >= GOAL_POSITION && velocity >= GOAL_VELOCITY;
        let mut reward = if goal { GOAL_REWARD } else { 0.0 };
        reward -= force * force * ACTION_COST;
        (Self { position, velocity }, reward, goal)
    }
}

#[derive(Clone, Debug, Default)]
pub struct MountainCar {
    state: Option<MountainCarState>,
    steps: usize,
    done: bool,
}

impl MountainCar {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts an episode from an explicit state.
    pub fn with_state(state: MountainCarState) -> Self {
        Self { state: Some(state), steps: 0, done: false }
    }

    pub fn current(&self) -> Option<MountainCarState> {
        self.state
    }
}

impl Environment for MountainCar {
    fn kind(&self) -> EnvKind {
        EnvKind::MountainCar
    }

    fn n_obs(&self) -> usize {
        2
    }

    fn n_act(&self) -> usize {
        1
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous { low: -1.0, high: 1.0 }
    }

    fn max_steps(&self) -> usize {
        MAX_STEPS
    }

    fn dt(&self) -> f64 {
        1.0
    }

    /// Position uniform in `[-0.6, -0.4)`, velocity 0.
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let position = rng.random_range(-0.6..-0.4);
        self.state = Some(MountainCarState { position, velocity: 0.0 });
        self.steps = 0;
        self.done = false;
        vec![position, 0.0]
    }

    fn advance(&mut self, action: Action) -> Result<(f64, bool), EnvError> {
        let state = self.state.ok_or(EnvError::NotReset)?;
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        let Action::Continuous(force) = action else {
            return Err(EnvError::WrongAction { env: "mountain_car", action });
        };
        let (next, reward, goal) = state.step(force);
        self.state = Some(next);
        self.steps += 1;
        self.done = goal || self.steps >= MAX_STEPS;
        Ok((reward, self.done))
    }

    fn observe(&self, out: &mut [f64]) {
        if let Some(s) = self.state {
            out[0] = s.position;
            out[1] = s.velocity;
        }
    }

    fn state(&self) -> Vec<f64> {
        self.state.map_or_else(Vec::new, |s| vec![s.position, s.velocity])
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}
