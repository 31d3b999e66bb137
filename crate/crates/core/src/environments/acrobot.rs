//! Acrobot: a two-link pendulum actuated only at the middle joint must swing
//! its tip above a target height.

use std::f64::consts::PI;

use rand::Rng as _;

use super::{Action, ActionSpace, EnvError, EnvKind, Environment};
use crate::seeding::rng_from_seed;

pub const DT: f64 = 0.2;
pub const LINK_LENGTH_1: f64 = 1.0;
pub const LINK_MASS_1: f64 = 1.0;
pub const LINK_MASS_2: f64 = 1.0;
pub const LINK_COM_POS_1: f64 = 0.5;
pub const LINK_COM_POS_2: f64 = 0.5;
pub const LINK_MOI: f64 = 1.0;
pub const GRAVITY: f64 = 9.8;
pub const MAX_VEL_1: f64 = 4.0 * PI;
pub const MAX_VEL_2: f64 = 9.0 * PI;
pub const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];
pub const MAX_STEPS: usize = 500;

/// `(θ1, θ2, ω1, ω2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcrobotState(pub [f64; 4]);

impl AcrobotState {
    /// Tip above the target height: `-cos θ1 - cos(θ1 + θ2) > 1`.
    pub fn is_terminal(&self) -> bool {
        let [t1, t2, _, _] = self.0;
        -t1.cos() - (t2 + t1).cos() > 1.0
    }

    /// One RK4 step of length [`DT`] under `torque`, then angle wrapping and
    /// velocity clamping.
    pub fn step(self, torque: f64) -> Self {
        let s = self.0;
        let dt2 = DT / 2.0;
        let k1 = derivatives(s, torque);
        let k2 = derivatives(add(s, dt2, k1), torque);
        let k3 = derivatives(add(s, dt2, k2), torque);
        let k4 = derivatives(add(s, DT, k3), torque);
        let mut ns = [0.0; 4];
        for i in 0..4 {
            ns[i] = s[i] + DT / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        ns[0] = wrap(ns[0], -PI, PI);
        ns[1] = wrap(ns[1], -PI, PI);
        ns[2] = ns[2].clamp(-MAX_VEL_1, MAX_VEL_1);
        ns[3] = ns[3].clamp(-MAX_VEL_2, MAX_VEL_2);
        AcrobotState(ns)
    }

    pub fn observation(&self) -> [f64; 6] {
        let [t1, t2, w1, w2] = self.0;
        [t1.cos(), t1.sin(), t2.cos(), t2.sin(), w1, w2]
    }
}

fn add(s: [f64; 4], h: f64, k: [f64; 4]) -> [f64; 4] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
}

fn wrap(mut x: f64, m: f64, big_m: f64) -> f64 {
    let diff = big_m - m;
    while x > big_m {
        x -= diff;
    }
    while x < m {
        x += diff;
    }
    x
}

/// Equations of motion (the textbook variant, which includes the
/// `ω1² sin θ2` term in the second joint's acceleration).
fn derivatives(s: [f64; 4], a: f64) -> [f64; 4] {
    let (m1, m2, l1, lc1, lc2) = (LINK_MASS_1, LINK_MASS_2, LINK_LENGTH_1, LINK_COM_POS_1, LINK_COM_POS_2);
    let (i1, i2, g) = (LINK_MOI, LINK_MOI, GRAVITY);
    let [theta1, theta2, dtheta1, dtheta2] = s;
    let d1 = m1 * lc1.powi(2) + m2 * (l1.powi(2) + lc2.powi(2) + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2.powi(2) + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2.powi(2) * theta2.sin() - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1.powi(2) * theta2.sin() - phi2)
        / (m2 * lc2.powi(2) + i2 - d2.powi(2) / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

#[derive(Clone, Debug, Default)]
pub struct Acrobot {
    state: Option<AcrobotState>,
    steps: usize,
    done: bool,
}

impl Acrobot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_state(state: AcrobotState) -> Self {
        Self { state: Some(state), steps: 0, done: false }
    }

    pub fn current(&self) -> Option<AcrobotState> {
        self.state
    }
}

impl Environment for Acrobot {
    fn kind(&self) -> EnvKind {
        EnvKind::Acrobot
    }

    fn n_obs(&self) -> usize {
        6
    }

    fn n_act(&self) -> usize {
        3
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(3)
    }

    fn max_steps(&self) -> usize {
        MAX_STEPS
    }

    fn dt(&self) -> f64 {
        DT
    }

    /// Each state component uniform in `[-0.1, 0.1)`.
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let s = AcrobotState(std::array::from_fn(|_| rng.random_range(-0.1..0.1)));
        self.state = Some(s);
        self.steps = 0;
        self.done = false;
        s.observation().to_vec()
    }

    /// Reward is −1 on every step, including the one that reaches the target.
    fn advance(&mut self, action: Action) -> Result<(f64, bool), EnvError> {
        let state = self.state.ok_or(EnvError::NotReset)?;
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        let Action::Discrete(index) = action else {
            return Err(EnvError::WrongAction { env: "acrobot", action });
        };
        let torque = *TORQUES.get(index).ok_or(EnvError::ActionOutOfRange { index, arity: 3 })?;
        let next = state.step(torque);
        self.state = Some(next);
        self.steps += 1;
        self.done = next.is_terminal() || self.steps >= MAX_STEPS;
        Ok((-1.0, self.done))
    }

    fn observe(&self, out: &mut [f64]) {
        if let Some(s) = self.state {
            out.copy_from_slice(&s.observation());
        }
    }

    fn state(&self) -> Vec<f64> {
        self.state.map_or_else(Vec::new, |s| s.0.to_vec())
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}
