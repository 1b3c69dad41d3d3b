//! Environment statistics and reproducibility.

use proptest::prelude::*;
use value_profiles::env::{Arm, HintObs, RewardObs};
use value_profiles::{Action, Context, Environment, TaskConfig};

#[test]
fn hint_accuracy_frequency() {
    // fresh single-trial environments so the better arm is pinned by the schedule
    let mut hits = 0;
    let mut n = 0;
    let task = TaskConfig {
        n_trials: 100_000,
        context_block_len: 100_000,
        volatile_arm_switch_period: 100_000,
        seed: 42,
        ..TaskConfig::default()
    };
    let mut env = Environment::new(task).unwrap();
    while let Some(s) = env.state() {
        let obs = env.step(Action::Hint).unwrap();
        let correct = match s.better_arm {
            Arm::Left => HintObs::HintLeft,
            Arm::Right => HintObs::HintRight,
        };
        hits += usize::from(obs.hint == correct);
        n += 1;
    }
    let f = hits as f64 / n as f64;
    assert!((f - 0.85).abs() < 0.01, "hint accuracy {f}");
}

#[test]
fn stable_win_frequency() {
    let task = TaskConfig {
        n_trials: 100_000,
        context_block_len: 100_000,
        first_context: Context::Stable,
        seed: 9,
        ..TaskConfig::default()
    };
    let mut env = Environment::new(task).unwrap();
    let mut wins = 0;
    let mut n = 0;
    while let Some(s) = env.state() {
        let action = match s.better_arm {
            Arm::Left => Action::Left,
            Arm::Right => Action::Right,
        };
        wins += usize::from(env.step(action).unwrap().reward == RewardObs::Win);
        n += 1;
    }
    let f = wins as f64 / n as f64;
    // 3 sigma binomial band on 1e5 draws is about 0.003
    assert!((f - 0.90).abs() < 0.01, "win frequency {f}");
}

proptest! {
    #[test]
    fn same_seed_same_observations(seed in any::<u64>(), actions in proptest::collection::vec(0usize..4, 80)) {
        let task = TaskConfig { n_trials: 80, seed, ..TaskConfig::default() };
        let run = || {
            let mut env = Environment::new(task.clone()).unwrap();
            actions.iter().map(|&a| env.step(Action::ALL[a]).unwrap()).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn schedule_is_periodic_and_action_free(seed in any::<u64>(), block in 1usize..60) {
        let task = TaskConfig { n_trials: 240, context_block_len: block, seed, ..TaskConfig::default() };
        let env = Environment::new(task).unwrap();
        for s in env.schedule() {
            let expected = if (s.trial_index / block) % 2 == 0 { Context::Volatile } else { Context::Stable };
            prop_assert_eq!(s.context, expected);
        }
    }

    #[test]
    fn observation_rules_hold(seed in any::<u64>(), actions in proptest::collection::vec(0usize..4, 40)) {
        let task = TaskConfig { n_trials: 40, seed, ..TaskConfig::default() };
        let mut env = Environment::new(task).unwrap();
        for a in actions {
            let action = Action::ALL[a];
            let obs = env.step(action).unwrap();
            prop_assert!(obs.is_consistent_with(action));
            prop_assert_eq!(obs.choice, action);
        }
    }
}
