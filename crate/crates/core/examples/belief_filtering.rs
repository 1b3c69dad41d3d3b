//! Factorized belief filtering on a hand-written trial sequence, checked
//! against brute-force enumeration of the joint state.

use value_profiles::beliefs::{enumerate_posterior, predict, update, FactorizedBeliefs};
use value_profiles::env::{HintObs, RewardObs};
use value_profiles::{Action, GenerativeModel, ModelHyperParams, Observation, TaskConfig};

fn main() -> value_profiles::Result<()> {
    let model = GenerativeModel::new(&TaskConfig::default(), ModelHyperParams::default())?;
    let obs = |action, hint, reward| Observation {
        hint,
        reward,
        choice: action,
    };
    let trials = [
        obs(Action::Hint, HintObs::HintLeft, RewardObs::Null),
        obs(Action::Left, HintObs::Null, RewardObs::Win),
        obs(Action::Left, HintObs::Null, RewardObs::Win),
        obs(Action::Left, HintObs::Null, RewardObs::Loss),
        obs(Action::Left, HintObs::Null, RewardObs::Loss),
        obs(Action::Hint, HintObs::HintRight, RewardObs::Null),
        obs(Action::Right, HintObs::Null, RewardObs::Win),
    ];

    let mut beliefs = FactorizedBeliefs::prior(&model);
    println!("action  hint        reward  q(volatile)  q(left better)  |fast - oracle|");
    for o in trials {
        let prior = predict(&beliefs, o.choice, &model);
        let next = update(&prior, &o, &model)?;
        let oracle = enumerate_posterior(&prior, &o, &model).expect("observation is possible");
        let gap = next
            .context
            .iter()
            .zip(&oracle.context)
            .chain(next.arm.iter().zip(&oracle.arm))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{:<6}  {:<10}  {:<6}  {:>11.4}  {:>14.4}  {gap:.1e}",
            o.choice.name(),
            o.hint.name(),
            o.reward.name(),
            next.context[0],
            next.arm[0]
        );
        beliefs = next;
    }
    Ok(())
}
