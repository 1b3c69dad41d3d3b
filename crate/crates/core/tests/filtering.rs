//! Joint-state filtering against brute-force enumeration.

use proptest::prelude::*;
use value_profiles::beliefs::{enumerate_posterior, predict, update, FactorizedBeliefs};
use value_profiles::env::{HintObs, RewardObs};
use value_profiles::{Action, GenerativeModel, ModelHyperParams, Observation, TaskConfig};

fn model() -> GenerativeModel {
    GenerativeModel::new(&TaskConfig::default(), ModelHyperParams::default()).unwrap()
}

fn simplex<const N: usize>() -> impl Strategy<Value = [f64; N]> {
    proptest::collection::vec(0.01f64..1.0, N).prop_map(|v| {
        let s: f64 = v.iter().sum();
        std::array::from_fn(|i| v[i] / s)
    })
}

fn consistent_obs(action: Action, hint: usize, reward: usize) -> Observation {
    Observation {
        hint: if action == Action::Hint {
            [HintObs::HintLeft, HintObs::HintRight][hint % 2]
        } else {
            HintObs::Null
        },
        reward: if action.arm().is_some() {
            [RewardObs::Loss, RewardObs::Win][reward % 2]
        } else {
            RewardObs::Null
        },
        choice: action,
    }
}

proptest! {
    #[test]
    fn update_matches_enumeration(
        context in simplex::<2>(),
        arm in simplex::<2>(),
        a in 0usize..4,
        h in 0usize..2,
        r in 0usize..2,
    ) {
        let m = model();
        let action = Action::ALL[a];
        let b = FactorizedBeliefs { context, arm, choice: [1.0, 0.0, 0.0, 0.0] };
        let prior = predict(&b, action, &m);
        let obs = consistent_obs(action, h, r);
        let fast = update(&prior, &obs, &m).unwrap();
        let slow = enumerate_posterior(&prior, &obs, &m).unwrap();
        for (x, y) in fast.context.iter().zip(&slow.context)
            .chain(fast.arm.iter().zip(&slow.arm))
            .chain(fast.choice.iter().zip(&slow.choice))
        {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(fast.is_valid(1e-10));
    }

    #[test]
    fn impossible_echo_is_degenerate(a in 0usize..4, b in 0usize..4) {
        prop_assume!(a != b);
        let m = model();
        let prior = predict(&FactorizedBeliefs::prior(&m), Action::ALL[a], &m);
        let obs = Observation { hint: HintObs::Null, reward: RewardObs::Null, choice: Action::ALL[b] };
        prop_assert!(update(&prior, &obs, &m).is_err());
        prop_assert!(enumerate_posterior(&prior, &obs, &m).is_none());
    }
}

#[test]
fn win_on_left_raises_left_only() {
    let m = model();
    let prior = predict(&FactorizedBeliefs::prior(&m), Action::Left, &m);
    let post = update(&prior, &consistent_obs(Action::Left, 0, 1), &m).unwrap();
    assert!(post.arm[0] > 0.5);
    // with a flat arm belief a win is equally likely in both contexts
    assert!((post.context[1] - 0.5).abs() < 1e-12);
    assert_eq!(post.choice, [0.0, 0.0, 1.0, 0.0]);
}
