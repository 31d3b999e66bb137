//! Control benchmarks behind a common step/reset contract, the mapping from
//! network outputs to actions, and progressive multi-scenario fitness.
//!
//! Physics runs in `f64` regardless of the network's scalar type.

pub mod acrobot;
mod fitness;
pub mod mountain_car;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::genome::Activation;
use crate::network::NetworkError;

pub use acrobot::{Acrobot, AcrobotState};
pub use fitness::{
    progressive_fitness, run_episode, scenario_seed, write_trace_csv, EnvEvaluator, EpisodeOutcome, FitnessOutcome, ScenarioSet,
    ThresholdSchedule, TraceRow,
};
pub use mountain_car::{MountainCar, MountainCarState};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("step called after the episode ended")]
    StepAfterDone,
    #[error("step called before reset")]
    NotReset,
    #[error("{env} expects {expected} network outputs, got {found}")]
    OutputArity { env: &'static str, expected: usize, found: usize },
    #[error("{env} got an action of the wrong kind: {action:?}")]
    WrongAction { env: &'static str, action: Action },
    #[error("discrete action {index} out of range 0..{arity}")]
    ActionOutOfRange { index: usize, arity: usize },
    #[error("scenario set: {0}")]
    Scenarios(String),
    #[error("unknown environment `{0}` (expected mountain_car or acrobot)")]
    UnknownEnvironment(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Action {
    Continuous(f64),
    Discrete(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActionSpace {
    Continuous { low: f64, high: f64 },
    Discrete(usize),
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Send {
    fn kind(&self) -> EnvKind;
    fn n_obs(&self) -> usize;
    /// Network outputs the action adapter expects.
    fn n_act(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    fn max_steps(&self) -> usize;
    /// Control time step handed to network memory.
    fn dt(&self) -> f64;
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    /// Advances one step and returns `(reward, done)`; the new observation is
    /// available from [`Environment::observe`].
    fn advance(&mut self, action: Action) -> Result<(f64, bool), EnvError>;
    fn observe(&self, out: &mut [f64]);
    /// Raw physical state, for traces.
    fn state(&self) -> Vec<f64>;
    fn steps_taken(&self) -> usize;

    fn step(&mut self, action: Action) -> Result<Transition, EnvError> {
        let (reward, done) = self.advance(action)?;
        let mut observation = vec![0.0; self.n_obs()];
        self.observe(&mut observation);
        Ok(Transition { observation, reward, done })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvKind {
    MountainCar,
    Acrobot,
}

impl EnvKind {
    pub const ALL: [EnvKind; 2] = [EnvKind::MountainCar, EnvKind::Acrobot];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::MountainCar => "mountain_car",
            EnvKind::Acrobot => "acrobot",
        }
    }

    pub fn make(self) -> Box<dyn Environment> {
        match self {
            EnvKind::MountainCar => Box::new(MountainCar::new()),
            EnvKind::Acrobot => Box::new(Acrobot::new()),
        }
    }

    pub fn n_obs(self) -> usize {
        match self {
            EnvKind::MountainCar => 2,
            EnvKind::Acrobot => 6,
        }
    }

    pub fn n_act(self) -> usize {
        match self {
            EnvKind::MountainCar => 1,
            EnvKind::Acrobot => 3,
        }
    }

    pub fn max_steps(self) -> usize {
        match self {
            EnvKind::MountainCar => mountain_car::MAX_STEPS,
            EnvKind::Acrobot => acrobot::MAX_STEPS,
        }
    }

    pub fn dt(self) -> f64 {
        match self {
            EnvKind::MountainCar => 1.0,
            EnvKind::Acrobot => acrobot::DT,
        }
    }

    /// Lowest possible episode reward.
    pub fn min_episode_reward(self) -> f64 {
        match self {
            EnvKind::MountainCar => -0.1 * mountain_car::MAX_STEPS as f64,
            EnvKind::Acrobot => -(acrobot::MAX_STEPS as f64),
        }
    }

    /// `(centre, half-width)` of each observation component's range.
    pub fn observation_bounds(self) -> &'static [(f64, f64)] {
        use std::f64::consts::PI;
        match self {
            EnvKind::MountainCar => &[(-0.3, 0.9), (0.0, mountain_car::MAX_SPEED)],
            EnvKind::Acrobot => &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 4.0 * PI), (0.0, 9.0 * PI)],
        }
    }

    /// Maps each observation component from its range onto `[-1, 1]`.
    pub fn normalize_observation(self, obs: &[f64], out: &mut [f64]) {
        for ((o, &x), &(centre, half)) in out.iter_mut().zip(obs).zip(self.observation_bounds()) {
            *o = (x - centre) / half;
        }
    }

    /// Average episode reward counted as solving the task.
    pub fn solve_threshold(self) -> f64 {
        match self {
            EnvKind::MountainCar => 90.0,
            EnvKind::Acrobot => -100.0,
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mountain_car" | "mountain_car_continuous" | "MountainCarContinuous-v0" => Ok(EnvKind::MountainCar),
            "acrobot" | "Acrobot-v1" => Ok(EnvKind::Acrobot),
            other => Err(EnvError::UnknownEnvironment(other.to_string())),
        }
    }
}

/// Maps network outputs to an action for `kind`.
///
/// Mountain Car reads one output as a force in `[-1, 1]`: sigmoid-family
/// outputs are rescaled by `2x - 1`, saturated-linear ones pass through.
/// Acrobot takes the argmax of three outputs, lowest index on ties.
pub fn action_adapter(kind: EnvKind, outputs: &[f64], activations: &[Activation]) -> Result<Action, EnvError> {
    if outputs.len() != kind.n_act() {
        return Err(EnvError::OutputArity { env: kind.name(), expected: kind.n_act(), found: outputs.len() });
    }
    match kind {
        EnvKind::MountainCar => {
            let x = outputs[0];
            let force = match activations.first() {
                Some(Activation::SaturatedLinear) => x,
                _ => 2.0 * x - 1.0,
            };
            Ok(Action::Continuous(force.clamp(-1.0, 1.0)))
        }
        EnvKind::Acrobot => {
            let mut best = 0;
            for (i, &x) in outputs.iter().enumerate().skip(1) {
                if x > outputs[best] {
                    best = i;
                }
            }
            Ok(Action::Discrete(best))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adapter_examples() {
        let sig = [Activation::Sigmoid];
        assert_eq!(action_adapter(EnvKind::MountainCar, &[0.5], &sig), Ok(Action::Continuous(0.0)));
        let lin = [Activation::SaturatedLinear];
        assert_eq!(action_adapter(EnvKind::MountainCar, &[-1.0], &lin), Ok(Action::Continuous(-1.0)));
        let acts = [Activation::Sigmoid; 3];
        assert_eq!(action_adapter(EnvKind::Acrobot, &[0.2, 0.9, 0.9], &acts), Ok(Action::Discrete(1)));
        assert!(matches!(
            action_adapter(EnvKind::Acrobot, &[0.2, 0.9], &acts),
            Err(EnvError::OutputArity { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn names_round_trip() {
        for kind in EnvKind::ALL {
            assert_eq!(kind.name().parse::<EnvKind>(), Ok(kind));
            let env = kind.make();
            assert_eq!((env.n_obs(), env.n_act(), env.max_steps()), (kind.n_obs(), kind.n_act(), kind.max_steps()));
        }
        assert!("lunar_lander".parse::<EnvKind>().is_err());
    }

    #[test]
    fn normalization_maps_bounds_to_unit_range() {
        let mut out = [0.0; 2];
        let close = |a: [f64; 2], b: [f64; 2]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        EnvKind::MountainCar.normalize_observation(&[-1.2, 0.07], &mut out);
        assert!(close(out, [-1.0, 1.0]), "{out:?}");
        EnvKind::MountainCar.normalize_observation(&[0.6, -0.07], &mut out);
        assert!(close(out, [1.0, -1.0]), "{out:?}");
        for kind in EnvKind::ALL {
            assert_eq!(kind.observation_bounds().len(), kind.n_obs());
        }
    }
}
