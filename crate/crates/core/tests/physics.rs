mod common;

use agent_core::environments::acrobot::{Acrobot, AcrobotState, MAX_STEPS as ACROBOT_STEPS};
use agent_core::environments::mountain_car::MountainCar;
use agent_core::environments::{Action, EnvKind, Environment};
use proptest::prelude::*;

#[test]
fn reference_traces_match_within_1e9() {
    let checks = common::check_all_traces();
    assert_eq!(checks.len(), 8, "expected four traces per environment");
    for c in &checks {
        assert_eq!(c.rows, 1000, "{}", c.file);
        println!("{}: max error {:e}", c.file, c.max_error);
        assert!(c.max_error <= 1e-9, "{}: max error {:e}", c.file, c.max_error);
        assert_eq!(c.flag_mismatches, 0, "{}", c.file);
    }
}

#[test]
fn traces_include_terminal_states() {
    let terminal: usize = ["mountain_car_pump.csv", "acrobot_pump.csv", "acrobot_seed2.csv"]
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(common::fixtures_dir().join(f)).unwrap();
            text.lines().skip(1).filter(|l| l.ends_with(",1")).count()
        })
        .sum();
    assert!(terminal > 0);
}

#[test]
fn acrobot_torqueless_episode_from_reset() {
    let mut env = Acrobot::new();
    env.reset(11);
    let mut total = 0.0;
    loop {
        let (r, done) = env.advance(Action::Discrete(1)).unwrap();
        total += r;
        if done {
            break;
        }
    }
    assert_eq!((env.steps_taken(), total), (ACROBOT_STEPS, -500.0));
}

fn replay(kind: EnvKind, seed: u64, actions: &[f64]) -> Vec<(Vec<f64>, f64, bool)> {
    let mut env = kind.make();
    env.reset(seed);
    let mut out = Vec::new();
    for &a in actions {
        let action = match kind {
            EnvKind::MountainCar => Action::Continuous(a),
            EnvKind::Acrobot => Action::Discrete((a.abs() * 3.0) as usize % 3),
        };
        let (r, done) = env.advance(action).unwrap();
        out.push((env.state(), r, done));
        if done {
            break;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seed_and_actions_determine_the_trajectory(
        seed in any::<u64>(),
        actions in prop::collection::vec(-1.0f64..1.0, 1..300),
    ) {
        for kind in EnvKind::ALL {
            let a = replay(kind, seed, &actions);
            let b = replay(kind, seed, &actions);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn mountain_car_episode_reward_is_at_most_100(seed in any::<u64>(), bias in -1.0f64..1.0, gain in -50.0f64..50.0) {
        let mut env = MountainCar::new();
        let mut obs = env.reset(seed);
        let mut total = 0.0;
        loop {
            let force = (bias + gain * obs[1]).clamp(-1.0, 1.0);
            let (r, done) = env.advance(Action::Continuous(force)).unwrap();
            total += r;
            env.observe(&mut obs);
            if done {
                prop_assert!(total <= 100.0);
                if env.steps_taken() == env.max_steps() && env.current().unwrap().position < 0.45 {
                    prop_assert!(total <= 0.0);
                }
                break;
            }
        }
    }

    #[test]
    fn acrobot_episode_reward_range(seed in any::<u64>(), pump in any::<bool>(), actions in prop::collection::vec(0usize..3, 500)) {
        let mut env = Acrobot::new();
        env.reset(seed);
        let mut total = 0.0;
        for &a in &actions {
            let a = if pump { if env.current().unwrap().0[3] > 0.0 { 2 } else { 0 } } else { a };
            let (r, done) = env.advance(Action::Discrete(a)).unwrap();
            total += r;
            if done {
                break;
            }
        }
        prop_assert!((-500.0..=-1.0).contains(&total), "{}", total);
    }

    #[test]
    fn acrobot_state_stays_in_bounds(s in prop::array::uniform4(-3.0f64..3.0), torque in 0usize..3) {
        let next = AcrobotState(s).step([-1.0, 0.0, 1.0][torque]);
        let [t1, t2, w1, w2] = next.0;
        prop_assert!(t1.abs() <= std::f64::consts::PI && t2.abs() <= std::f64::consts::PI);
        prop_assert!(w1.abs() <= 4.0 * std::f64::consts::PI && w2.abs() <= 9.0 * std::f64::consts::PI);
    }
}
