//! Categorical filtering over the factorized hidden state.
//!
//! The prediction step pushes each factor through its own transition. The
//! update step multiplies the three modality likelihoods into the full
//! 16-state joint built from the factor marginals, normalizes, and stores
//! the marginals again.

use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation};
use crate::error::{Error, Result};
use crate::math;
use crate::model::{joint_index, split_joint, GenerativeModel, N_ARM, N_CHOICE, N_CONTEXT, N_JOINT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizedBeliefs {
    /// `[volatile, stable]`
    pub context: [f64; N_CONTEXT],
    /// `[left, right]`
    pub arm: [f64; N_ARM],
    /// Indexed by [`Action::index`].
    pub choice: [f64; N_CHOICE],
}

impl FactorizedBeliefs {
    /// Beliefs at the first trial: the model's priors.
    pub fn prior(model: &GenerativeModel) -> Self {
        FactorizedBeliefs {
            context: model.d_context,
            arm: model.d_arm,
            choice: model.d_choice,
        }
    }

    /// Product of the factor marginals over the joint state space.
    pub fn joint(&self) -> [f64; N_JOINT] {
        let mut out = [0.0; N_JOINT];
        for (s, v) in out.iter_mut().enumerate() {
            let (c, a, ch) = split_joint(s);
            *v = self.context[c] * self.arm[a] * self.choice[ch];
        }
        out
    }

    pub fn from_joint(joint: &[f64; N_JOINT]) -> Self {
        let mut b = FactorizedBeliefs {
            context: [0.0; N_CONTEXT],
            arm: [0.0; N_ARM],
            choice: [0.0; N_CHOICE],
        };
        for (s, &p) in joint.iter().enumerate() {
            let (c, a, ch) = split_joint(s);
            b.context[c] += p;
            b.arm[a] += p;
            b.choice[ch] += p;
        }
        b
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        math::is_simplex(&self.context, tol) && math::is_simplex(&self.arm, tol) && math::is_simplex(&self.choice, tol)
    }

    /// Entropy (nats) of the better-arm factor.
    pub fn arm_entropy(&self) -> f64 {
        math::entropy(&self.arm)
    }
}

fn propagate<const S: usize>(b: &[[f64; S]; S], q: &[f64; S]) -> [f64; S] {
    let mut out = [0.0; S];
    for (to, v) in out.iter_mut().enumerate() {
        *v = (0..S).map(|from| b[to][from] * q[from]).sum();
    }
    out
}

/// Predictive prior after executing `action`.
pub fn predict(beliefs: &FactorizedBeliefs, action: Action, model: &GenerativeModel) -> FactorizedBeliefs {
    FactorizedBeliefs {
        context: propagate(&model.b_context, &beliefs.context),
        arm: propagate(&model.b_arm, &beliefs.arm),
        choice: propagate(&model.b_choice[action.index()], &beliefs.choice),
    }
}

/// Posterior after observing `obs`, re-factorized into marginals.
pub fn update(prior: &FactorizedBeliefs, obs: &Observation, model: &GenerativeModel) -> Result<FactorizedBeliefs> {
    let (h, r, c) = (obs.hint.index(), obs.reward.index(), obs.choice.index());
    let mut joint = prior.joint();
    for (s, p) in joint.iter_mut().enumerate() {
        *p *= model.obs_likelihood(h, r, c, s);
    }
    let total = math::normalize(&mut joint);
    if total.is_nan() || total <= 0.0 || total.is_infinite() {
        return Err(Error::DegenerateEvidence);
    }
    Ok(FactorizedBeliefs::from_joint(&joint))
}

/// One full filtering step: predict under `action`, then update on `obs`.
pub fn filter_step(
    beliefs: &FactorizedBeliefs,
    action: Action,
    obs: &Observation,
    model: &GenerativeModel,
) -> Result<FactorizedBeliefs> {
    update(&predict(beliefs, action, model), obs, model)
}

/// Joint posterior by explicit enumeration over `(context, arm, choice)`
/// triples. Kept separate from [`update`] as a reference implementation.
pub fn enumerate_posterior(
    prior: &FactorizedBeliefs,
    obs: &Observation,
    model: &GenerativeModel,
) -> Option<FactorizedBeliefs> {
    let mut weights = Vec::with_capacity(N_JOINT);
    for ctx in 0..N_CONTEXT {
        for arm in 0..N_ARM {
            for ch in 0..N_CHOICE {
                let s = joint_index(ctx, arm, ch);
                let w = prior.context[ctx]
                    * prior.arm[arm]
                    * prior.choice[ch]
                    * model.a_hint[obs.hint.index()][s]
                    * model.a_reward[obs.reward.index()][s]
                    * model.a_choice[obs.choice.index()][s];
                weights.push(((ctx, arm, ch), w));
            }
        }
    }
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    if z <= 0.0 {
        return None;
    }
    let mut out = FactorizedBeliefs {
        context: [0.0; N_CONTEXT],
        arm: [0.0; N_ARM],
        choice: [0.0; N_CHOICE],
    };
    for ((ctx, arm, ch), w) in weights {
        out.context[ctx] += w / z;
        out.arm[arm] += w / z;
        out.choice[ch] += w / z;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{HintObs, RewardObs, TaskConfig};
    use crate::model::ModelHyperParams;

    fn model() -> GenerativeModel {
        GenerativeModel::new(&TaskConfig::default(), ModelHyperParams::default()).unwrap()
    }

    fn uniform_after(action: Action) -> FactorizedBeliefs {
        let mut choice = [0.0; 4];
        choice[action.index()] = 1.0;
        FactorizedBeliefs {
            context: [0.5, 0.5],
            arm: [0.5, 0.5],
            choice,
        }
    }

    #[test]
    fn predict_arm_factor_single_row() {
        let m = model();
        let b = FactorizedBeliefs {
            context: [0.5, 0.5],
            arm: [1.0, 0.0],
            choice: [1.0, 0.0, 0.0, 0.0],
        };
        let p = predict(&b, Action::Start, &m);
        assert!((p.arm[0] - 0.95).abs() < 1e-15 && (p.arm[1] - 0.05).abs() < 1e-15);
        assert_eq!(p.context, [0.5, 0.5]);
    }

    #[test]
    fn predict_choice_becomes_action() {
        let m = model();
        let b = FactorizedBeliefs {
            context: [0.3, 0.7],
            arm: [0.2, 0.8],
            choice: [0.1, 0.2, 0.3, 0.4],
        };
        assert_eq!(predict(&b, Action::Hint, &m).choice, [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn hint_left_posterior_is_accuracy() {
        let m = model();
        let obs = Observation {
            hint: HintObs::HintLeft,
            reward: RewardObs::Null,
            choice: Action::Hint,
        };
        let post = update(&uniform_after(Action::Hint), &obs, &m).unwrap();
        // Bayes on two states: 0.5*0.85 / (0.5*0.85 + 0.5*0.15)
        assert!((post.arm[0] - 0.85).abs() < 1e-12);
        assert!((post.arm[1] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn null_observation_leaves_marginals() {
        let m = model();
        let prior = FactorizedBeliefs {
            context: [0.3, 0.7],
            arm: [0.6, 0.4],
            choice: [1.0, 0.0, 0.0, 0.0],
        };
        let obs = Observation {
            hint: HintObs::Null,
            reward: RewardObs::Null,
            choice: Action::Start,
        };
        let post = update(&prior, &obs, &m).unwrap();
        assert!((post.context[0] - 0.3).abs() < 1e-15);
        assert!((post.arm[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn win_on_believed_better_arm_favors_stable() {
        let m = model();
        let mut prior = uniform_after(Action::Left);
        prior.arm = [0.9, 0.1];
        let obs = Observation {
            hint: HintObs::Null,
            reward: RewardObs::Win,
            choice: Action::Left,
        };
        let post = update(&prior, &obs, &m).unwrap();
        // p(win|vol) = 0.9*0.7 + 0.1*0.3 = 0.66; p(win|stable) = 0.9*0.9 + 0.1*0.1 = 0.82
        let expected = 0.82 / (0.82 + 0.66);
        assert!((post.context[1] - expected).abs() < 1e-12);
        assert!(post.context[1] > 0.5);
    }

    #[test]
    fn impossible_observation_is_degenerate() {
        let m = model();
        // prior says the last action was start; echo claims left
        let prior = uniform_after(Action::Start);
        let obs = Observation {
            hint: HintObs::Null,
            reward: RewardObs::Win,
            choice: Action::Left,
        };
        assert!(matches!(update(&prior, &obs, &m), Err(Error::DegenerateEvidence)));
        assert!(enumerate_posterior(&prior, &obs, &m).is_none());
    }
}
